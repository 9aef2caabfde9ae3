#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "pdg/compile.hpp"
#include "pdg/decomp.hpp"
#include "pdg/engine.hpp"
#include "pdg/oracle.hpp"

using namespace pdg;

TEST(Model, DomainRoundTrip) {
    Domain d({0, 2}, {2, 5, 3});
    EXPECT_EQ(d.size(), 6u);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.encode(d.decode(i)), i);
    EXPECT_EQ(d.position(1), -1);
}

TEST(Model, ValidateFlagsBadCpd) {
    auto m = fx::bn_chain();
    m.arcs[1].cpd[0] = {0.5, 0.6};
    auto r = validate(m);
    EXPECT_TRUE(r.has("cpd-not-normalized"));
    EXPECT_THROW(checked(m), DomainError);
}

TEST(Model, ValidateFlagsUnknownVariable) {
    auto m = fx::bn_chain();
    m.arcs[1].sources = {"Z"};
    EXPECT_TRUE(validate(m).has("unknown-variable"));
}

TEST(Model, ScoreOfProductIsZeroForBn) {
    auto m = fx::bn_chain();
    JointDistribution mu = JointDistribution::over(m, {0.7 * 0.9, 0.7 * 0.1, 0.3 * 0.1, 0.3 * 0.9});
    EXPECT_NEAR(oinc(m, mu), 0.0, 1e-12);
    EXPECT_NEAR(score_gamma(m, mu, 1.0), 0.0, 1e-12);
    EXPECT_NEAR(score_gamma(m, mu, 0.3), score_gamma_regrouped(m, mu, 0.3), 1e-12);
}

TEST(Model, MarginalAndProb) {
    auto m = fx::bn_chain();
    auto mu = JointDistribution::over(m, {0.1, 0.2, 0.3, 0.4});
    auto y = mu.marginal({"Y"});
    EXPECT_NEAR(y[0], 0.4, 1e-15);
    EXPECT_NEAR(mu.prob({{"X", 1}, {"Y", 0}}), 0.3, 1e-15);
}

TEST(Decomp, MinFillCoversArcsAndIsValid) {
    PDG m;
    for (auto n : {"A", "B", "C", "D", "E"}) m.variables.push_back(fx::bin(n));
    // a 4-cycle plus a pendant: min-fill adds one chord
    m.arcs = {fx::arc("ab", {"A"}, {"B"}, {{0.5, 0.5}, {0.5, 0.5}}), fx::arc("bc", {"B"}, {"C"}, {{0.5, 0.5}, {0.5, 0.5}}),
              fx::arc("cd", {"C"}, {"D"}, {{0.5, 0.5}, {0.5, 0.5}}), fx::arc("da", {"D"}, {"A"}, {{0.5, 0.5}, {0.5, 0.5}}),
              fx::arc("de", {"D"}, {"E"}, {{0.5, 0.5}, {0.5, 0.5}})};
    for (auto method : {DecompMethod::min_fill, DecompMethod::min_degree}) {
        auto td = build_decomposition(m, method);
        EXPECT_EQ(check_decomposition(m, td), "");
        EXPECT_EQ(td.width(), 2);
        auto rct = root_and_assign(td, m);
        for (std::size_t a = 0; a < m.arcs.size(); ++a) {
            const auto& c = td.clusters[static_cast<std::size_t>(rct.arc_cluster[a])];
            for (int v : m.scope_of(a)) EXPECT_TRUE(std::binary_search(c.begin(), c.end(), v));
        }
    }
}

TEST(Decomp, RejectsBrokenRunningIntersection) {
    auto m = fx::bn_chain();
    m.variables.push_back(fx::bin("Z"));
    TreeDecomposition td{{{0, 1}, {2}, {0}}, {{0, 1}, {1, 2}}};
    EXPECT_NE(check_decomposition(m, td), "");
}

TEST(Compile, UnreducedDimensionsMatchFormulas) {
    auto m = checked(fx::bn_chain());
    CompileOptions o;
    o.reduce = false;
    auto rct = root_and_assign(build_decomposition(m, DecompMethod::min_fill), m);
    auto cp = compile_cluster_inc(m, rct, o);
    auto [n, mm] = expected_dims(cp.kind, cp.size);
    EXPECT_EQ(static_cast<std::size_t>(cp.program.n()), n);
    EXPECT_EQ(static_cast<std::size_t>(cp.program.m()), mm);
    // X -> Y alone: |V A| = |V C| = 4, so n = 16, m = 2*4 + 1
    auto xy = fx::bn_chain();
    xy.arcs.erase(xy.arcs.begin());
    xy = checked(xy);
    auto one = compile_cluster_inc(xy, root_and_assign(build_decomposition(xy, DecompMethod::min_fill), xy), o);
    EXPECT_EQ(one.program.n(), 16);
    EXPECT_EQ(one.program.m(), 9);
    for (auto kind : {0, 1}) {
        auto g = kind ? compile_cluster_small_gamma(m, rct, 0.5, o) : compile_joint_inc(m, o);
        auto [gn, gm] = expected_dims(g.kind, g.size);
        EXPECT_EQ(static_cast<std::size_t>(g.program.n()), gn);
        EXPECT_EQ(static_cast<std::size_t>(g.program.m()), gm);
    }
}

TEST(Compile, ZeroPlusWeightsForUniformStageOne) {
    auto m = checked(fx::bn_chain());
    auto nu = JointDistribution::uniform(m);
    auto f = freeze_marginals(m, nu);
    ASSERT_EQ(f.k.size(), 1u);
    for (double k : f.k[0]) EXPECT_NEAR(k, 0.25, 1e-15);
}

TEST(Compile, SupportPresolveDropsForcedZeros) {
    auto m = fx::bn_chain();
    m.arcs[1].cpd = {{1.0, 0.0}, {0.0, 1.0}};
    m = checked(m);
    auto sup = joint_support(m);
    int live = 0;
    for (char c : sup.live[0]) live += c != 0;
    EXPECT_EQ(live, 2);
}

TEST(Compile, JointAndClusterFormsAgree) {
    auto m = checked(fx::bn_chain());
    m.arcs.push_back(fx::arc("qy", {}, {"Y"}, {{0.4, 0.6}}, 1.0, 0.5));
    auto rct = root_and_assign(build_decomposition(m, DecompMethod::min_fill), m);
    auto c = conic::solve(compile_cluster_small_gamma(m, rct, 0.2).program, 1e-10);
    auto j = conic::solve(compile_joint_small_gamma(m, 0.2).program, 1e-10);
    ASSERT_EQ(c.status, conic::Status::optimal);
    ASSERT_EQ(j.status, conic::Status::optimal);
    EXPECT_NEAR(c.primal_objective, j.primal_objective, 1e-8);
}

TEST(Oracle, CountModels) {
    Cnf f;
    f.nvars = 3;
    f.clauses = {{1, 2}, {-1, 3}};
    EXPECT_EQ(count_models(f), 4u);
    f.clauses.push_back({-2});
    f.clauses.push_back({-3});
    EXPECT_EQ(count_models(f), 0u);
}

TEST(Oracle, ParseDimacs) {
    std::istringstream in("c comment\np cnf 3 2\n1 -2 0\n2 3 0\n");
    auto f = parse_dimacs(in);
    EXPECT_EQ(f.nvars, 3);
    ASSERT_EQ(f.clauses.size(), 2u);
    EXPECT_EQ(f.clauses[0], (std::vector<int>{1, -2}));
}

TEST(Oracle, ConflictAtZeroPlus) {
    auto r = brute_force_optimum(fx::conflict(), GammaSpec::zero_plus());
    ASSERT_TRUE(r.finite);
    EXPECT_NEAR(r.mu[0], 0.5, 1e-5);
}

TEST(Oracle, MatchesEngineOnBnChain) {
    auto m = checked(fx::bn_chain());
    auto r = brute_force_optimum(m, GammaSpec::positive(1.0));
    auto e = infer(m, GammaSpec::positive(1.0));
    EXPECT_NEAR(r.score, e.inconsistency, 1e-6);
    EXPECT_NEAR(r.mu[3], 0.27, 1e-5);
}

TEST(Oracle, RefusesLargeWorlds) {
    PDG m;
    for (int i = 0; i < 20; ++i) m.variables.push_back(fx::bin("V" + std::to_string(i)));
    OracleOptions o;
    o.max_worlds = 1024;
    EXPECT_THROW(brute_force_optimum(m, GammaSpec::positive(1.0), o), SizeError);
}

TEST(Oracle, PolishKeepsMassAtGammaZero) {
    // gamma = 0 makes the objective 1-homogeneous; the Newton polish must not
    // shed mass to lower it
    PDG m;
    for (auto n : {"A", "B", "C"}) m.variables.push_back(fx::bin(n));
    m.arcs = {fx::arc("a", {"B", "C"}, {"A"}, {{0.2, 0.8}, {0.6, 0.4}, {0.5, 0.5}, {0.9, 0.1}}, 2.0, 1.3),
              fx::arc("b", {}, {"B"}, {{0.3, 0.7}}, 0.5, 1.6), fx::arc("c", {"A"}, {"C"}, {{0.1, 0.9}, {0.7, 0.3}}, 1.0, 0.8),
              fx::arc("d", {"A"}, {"B"}, {{0.4, 0.6}, {0.95, 0.05}}, 0.0, 1.2)};
    m = checked(m);
    auto r = brute_force_optimum(m, GammaSpec::zero());
    double s = 0.0;
    for (double p : r.mu.probs()) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_NEAR(r.score, infer(m, GammaSpec::zero()).inconsistency, 1e-6);
}
