#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "pdgcli/gen.hpp"

namespace acc {

using pdg::GammaSpec;

namespace {

// Pinned tolerances.
constexpr double kOracleObjTol = 1e-4;
constexpr double kOracleTvTol = 1e-3;
constexpr double kFormObjTol = 1e-6;
constexpr double kFormTvTol = 1e-5;
constexpr double kBnTol = 1e-6;
constexpr double kSatRelTol = 0.01;
constexpr double kStageOneOincTol = 1e-6;
constexpr double kEntropyTol = 1e-9;
constexpr double kCmiTol = 1e-5;
constexpr double kQueryEps = 1e-4;
constexpr double kSearchEps = 1e-3;
constexpr double kSolverTol = 1e-8;
constexpr double kFdRelTol = 1e-6;
constexpr double kMiTol = 1e-5;
constexpr double kCccpObjTol = 1e-6;
constexpr double kCccpMonotoneSlack = 1e-7;
constexpr double kSmokeSeconds = 60.0;
// solver tolerance for the joint/cluster comparison
constexpr double kTightTol = 1e-10;

std::string what(const std::exception& e) { return e.what(); }

std::string gname(const GammaSpec& g) { return "gamma=" + g.str(); }

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    constexpr int kInstances = 50;
    Outcome out;
    auto ms = corpus(kInstances);
    double worst_obj = 0.0, worst_tv = 0.0, worst_tv0 = 0.0;
    int comparisons = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& m = ms[i];
        std::string tag = "instance " + std::to_string(i) + " ";
        try {
            // gamma = 0: the optimum is a face, so the objective is compared at
            // 0 and the distribution at 0+, where it is unique
            auto orc0 = pdg::brute_force_optimum(m, GammaSpec::zero_plus());
            auto r0 = pdg::infer(m, GammaSpec::zero());
            auto rp = pdg::infer(m, GammaSpec::zero_plus());
            if (orc0.finite == r0.infinite) {
                out.fail(tag + "gamma=0 finiteness disagrees");
                continue;
            }
            if (orc0.finite) {
                double d = std::abs(r0.inconsistency - orc0.score);
                double t = tv(joint_of(rp), orc0.mu);
                worst_obj = std::max(worst_obj, d);
                worst_tv0 = std::max(worst_tv0, t);
                ++comparisons;
                if (!(d <= kOracleObjTol)) out.fail(tag + "gamma=0 objective off by " + sci(d));
                if (!(t <= kOracleTvTol)) out.fail(tag + "gamma=0+ TV " + sci(t));
            }
            for (double g : {1e-4, 1e-2, max_convex_gamma(m)}) {
                auto gs = GammaSpec::positive(g);
                auto orc = pdg::brute_force_optimum(m, gs);
                auto r = pdg::infer(m, gs);
                if (orc.finite == r.infinite) {
                    out.fail(tag + gname(gs) + " finiteness disagrees");
                    continue;
                }
                if (!orc.finite) continue;
                double d = std::abs(r.inconsistency - orc.score);
                double t = tv(joint_of(r), orc.mu);
                worst_obj = std::max(worst_obj, d);
                worst_tv = std::max(worst_tv, t);
                ++comparisons;
                if (!(d <= kOracleObjTol)) out.fail(tag + gname(gs) + " objective off by " + sci(d));
                if (!(t <= kOracleTvTol)) out.fail(tag + gname(gs) + " TV " + sci(t));
            }
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(ms.size()) + " instances, " + std::to_string(comparisons) +
                 " comparisons; max |dobj| " + sci(worst_obj) + ", max TV " + sci(worst_tv) +
                 " (gamma>0), " + sci(worst_tv0) + " (0+)";
    return out;
}

// ---------------------------------------------------------------------------

Outcome joint_cluster_agreement() {
    constexpr int kInstances = 50;
    Outcome out;
    auto ms = corpus(kInstances);
    pdg::EngineOptions o;
    o.tol = kTightTol;
    double worst_obj = 0.0, worst_tv = 0.0;
    int comparisons = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& m = ms[i];
        std::vector<GammaSpec> gs{GammaSpec::zero(), GammaSpec::positive(1e-4), GammaSpec::positive(1e-2),
                                  GammaSpec::positive(max_convex_gamma(m)), GammaSpec::zero_plus()};
        for (const auto& g : gs) {
            std::string tag = "instance " + std::to_string(i) + " " + gname(g) + " ";
            try {
                auto r = pdg::infer(m, g, o);
                auto j = joint_solve(m, g, kTightTol);
                if (r.infinite) {
                    if (j.status != "infeasible" && j.status != "primal-infeasible")
                        out.fail(tag + "cluster form infinite, joint form " + j.status);
                    continue;
                }
                if (!j.ok) {
                    out.fail(tag + "joint form solve ended " + j.status);
                    continue;
                }
                double cobj = g.kind == GammaSpec::Kind::zero_plus ? r.oinc_stage_one : r.inconsistency;
                double d = std::abs(cobj - j.objective);
                worst_obj = std::max(worst_obj, d);
                ++comparisons;
                if (!(d <= kFormObjTol)) out.fail(tag + "objective off by " + sci(d));
                // at gamma = 0 the optimal distribution is not unique
                if (g.kind == GammaSpec::Kind::zero) continue;
                double t = tv(joint_of(r), j.mu);
                worst_tv = std::max(worst_tv, t);
                if (!(t <= kFormTvTol)) out.fail(tag + "TV " + sci(t));
            } catch (const std::exception& e) {
                out.fail(tag + what(e));
            }
        }
    }
    out.detail = std::to_string(comparisons) + " comparisons; max |dobj| " + sci(worst_obj) + ", max TV " +
                 sci(worst_tv);
    return out;
}

// ---------------------------------------------------------------------------

Outcome bn_embedding() {
    constexpr int kInstances = 20;
    Outcome out;
    double worst_inc = 0.0, worst_q = 0.0;
    int queries = 0;
    for (int k = 0; k < kInstances; ++k) {
        int n = 3 + k % 6;
        bool chain = k % 2 == 0;
        auto m = pdgcli::random_bn(n, chain, 1000 + static_cast<std::uint64_t>(k), {2, 3});
        std::string tag = "bn " + std::to_string(k) + " ";
        try {
            auto r = pdg::infer(m, GammaSpec::positive(1.0));
            worst_inc = std::max(worst_inc, std::abs(r.inconsistency));
            if (!(std::abs(r.inconsistency) <= kBnTol)) out.fail(tag + "inconsistency " + sci(r.inconsistency));
            auto truth = bn_joint(m);
            auto check = [&](const std::vector<int>& vars) {
                std::size_t total = 1;
                for (int v : vars) total *= m.card(v);
                for (std::size_t idx = 0; idx < total; ++idx) {
                    pdg::Event ev;
                    std::vector<std::pair<std::string, int>> ex;
                    std::size_t rest = idx;
                    for (auto it = vars.rbegin(); it != vars.rend(); ++it) {
                        int val = static_cast<int>(rest % m.card(*it));
                        rest /= m.card(*it);
                        ev.emplace_back(m.variables[*it].name, m.variables[*it].values[val]);
                        ex.emplace_back(m.variables[*it].name, val);
                    }
                    double d = std::abs(pdg::query_marginal(r.beliefs, ev).estimate - truth.prob(ex));
                    worst_q = std::max(worst_q, d);
                    ++queries;
                    if (!(d <= kBnTol)) out.fail(tag + "marginal off by " + sci(d));
                }
            };
            for (int v = 0; v < n; ++v) check({v});
            // pairs that span the decomposition
            check({0, n - 1});
            check({n / 2, n - 1});
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(kInstances) + " networks, " + std::to_string(queries) +
                 " queries; max |inconsistency| " + sci(worst_inc) + ", max marginal error " + sci(worst_q);
    return out;
}

// ---------------------------------------------------------------------------

Outcome sharp_sat() {
    constexpr int kFormulas = 20;
    // the uniform variant has one arc over every variable, hence one cluster
    // of 2^(n+m) worlds; n + m stays at most 15
    constexpr int kMaxWorldBits = 15;
    Outcome out;
    double worst = 0.0, worst_u = 0.0;
    for (int k = 0; k < kFormulas; ++k) {
        int n = 4 + k % 7;
        std::mt19937_64 g(700 + static_cast<std::uint64_t>(k));
        int lo = std::max(2, n / 2), hi = std::min(3 * n, kMaxWorldBits - n);
        int mcl = std::uniform_int_distribution<int>(lo, std::max(lo, hi))(g);
        auto f = random_3cnf(n, mcl, 500 + static_cast<std::uint64_t>(k));
        double count = static_cast<double>(pdg::count_models(f));
        std::string tag = "cnf " + std::to_string(k) + " (n=" + std::to_string(n) + ", m=" + std::to_string(mcl) + ") ";
        try {
            auto r = pdg::infer(pdg::encode_cnf(f), GammaSpec::positive(1.0));
            double est = std::exp(-r.inconsistency);
            double rel = std::abs(est - count) / count;
            worst = std::max(worst, rel);
            if (!(rel <= kSatRelTol)) out.fail(tag + "gamma=1 estimate " + std::to_string(est) + " vs " + std::to_string(count));
            auto u = pdg::infer(pdg::encode_cnf_uniform(f), GammaSpec::zero());
            double est_u = std::exp2(n + mcl) * std::exp(-u.inconsistency);
            double rel_u = std::abs(est_u - count) / count;
            worst_u = std::max(worst_u, rel_u);
            if (!(rel_u <= kSatRelTol)) out.fail(tag + "uniform estimate " + std::to_string(est_u) + " vs " + std::to_string(count));
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(kFormulas) + " formulas; max relative error " + sci(worst) + " (gamma=1), " +
                 sci(worst_u) + " (uniform arc, gamma=0)";
    return out;
}

// ---------------------------------------------------------------------------

Outcome zero_plus_pipeline() {
    constexpr int kInstances = 25;
    Outcome out;
    auto ms = corpus(kInstances);
    double worst_oinc = 0.0, worst_tv = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& m = ms[i];
        std::string tag = "instance " + std::to_string(i) + " ";
        if (m.world_count() > 256) continue;
        try {
            auto r = pdg::infer(m, GammaSpec::zero_plus());
            auto orc = pdg::brute_force_optimum(m, GammaSpec::zero_plus());
            if (r.infinite || !orc.finite) {
                if (r.infinite != !orc.finite) out.fail(tag + "finiteness disagrees");
                continue;
            }
            double kept = pdg::oinc_from_beliefs(r.beliefs.model, r.beliefs.rct, r.beliefs.mu);
            double d = std::abs(kept - r.oinc_stage_one);
            worst_oinc = std::max(worst_oinc, d);
            if (!(d <= kStageOneOincTol)) out.fail(tag + "stage two moved OInc by " + sci(d));
            double t = tv(joint_of(r), orc.mu);
            worst_tv = std::max(worst_tv, t);
            if (!(t <= kOracleTvTol)) out.fail(tag + "TV to oracle " + sci(t));
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(ms.size()) + " instances; max OInc drift " + sci(worst_oinc) +
                 ", max TV to brute-force 0+ " + sci(worst_tv);
    return out;
}

// ---------------------------------------------------------------------------

Outcome entropy_decomposition() {
    constexpr int kVectors = 100;
    Outcome out;
    double worst = 0.0;
    int roots = 0;
    for (int k = 0; k < kVectors; ++k) {
        pdgcli::RandomSpec spec{{3, 8}, {2, 3}, {2, 8}, {0, 2}, {1, 2}};
        auto m = pdg::checked(pdgcli::random_pdg(spec, 2000 + static_cast<std::uint64_t>(k)));
        std::string tag = "vector " + std::to_string(k) + " ";
        try {
            auto td = pdg::build_decomposition(m, pdg::DecompMethod::min_fill);
            std::mt19937_64 g(4000 + static_cast<std::uint64_t>(k));
            std::exponential_distribution<double> ex(1.0);
            std::vector<double> p(m.world_count());
            double s = 0.0;
            for (double& v : p) s += (v = ex(g));
            for (double& v : p) v /= s;
            auto beliefs = pdg::beliefs_of_joint(m, td, pdg::JointDistribution::over(m, p));
            double h = pdg::joint_from_beliefs(m, td, beliefs).entropy();
            double d = std::abs(pdg::entropy_bethe(m, td, beliefs) - h);
            for (int r = 0; r < static_cast<int>(td.clusters.size()); ++r) {
                d = std::max(d, std::abs(pdg::entropy_vcp(m, pdg::root_at(td, m, r), beliefs) - h));
                ++roots;
            }
            worst = std::max(worst, d);
            if (!(d <= kEntropyTol)) out.fail(tag + "entropy off by " + sci(d));
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(kVectors) + " belief vectors, " + std::to_string(roots) +
                 " rootings; max deviation " + sci(worst);
    return out;
}

// ---------------------------------------------------------------------------

// M1 over A0..A2, S0, S1 and M2 over B0..B2, S0, S1; only S is shared.
pdg::PDG composed(std::uint64_t seed) {
    pdgcli::RandomSpec spec{{5, 5}, {2, 2}, {3, 6}, {0, 2}, {1, 2}};
    pdg::PDG out;
    const char* names[2][5] = {{"A0", "A1", "A2", "S0", "S1"}, {"B0", "B1", "B2", "S0", "S1"}};
    for (int side = 0; side < 2; ++side) {
        auto part = pdgcli::random_pdg(spec, seed * 2 + static_cast<std::uint64_t>(side));
        auto rename = [&](const std::string& x) { return std::string(names[side][std::stoi(x.substr(1))]); };
        for (std::size_t v = 0; v < part.variables.size(); ++v) {
            std::string nm = names[side][v];
            if (out.index_of(nm) < 0) out.variables.push_back({nm, part.variables[v].values});
        }
        for (auto a : part.arcs) {
            a.id = std::string(side ? "m2_" : "m1_") + a.id;
            for (auto& s : a.sources) s = rename(s);
            for (auto& t : a.targets) t = rename(t);
            out.arcs.push_back(std::move(a));
        }
    }
    return pdg::checked(out);
}

Outcome markov_property() {
    constexpr int kInstances = 10;
    Outcome out;
    double worst = 0.0;
    int solves = 0;
    for (int k = 0; k < kInstances; ++k) {
        auto m = composed(6000 + static_cast<std::uint64_t>(k));
        for (const auto& g : {GammaSpec::positive(1e-2), GammaSpec::positive(0.5), GammaSpec::positive(1.0),
                              GammaSpec::zero_plus()}) {
            std::string tag = "composition " + std::to_string(k) + " " + gname(g) + " ";
            try {
                // joint form: no decomposition that could impose the independence
                auto j = joint_solve(m, g, kTightTol);
                if (!j.ok) {
                    out.fail(tag + "joint solve ended " + j.status);
                    continue;
                }
                double c = cmi(j.mu, {"A0", "A1", "A2"}, {"B0", "B1", "B2"}, {"S0", "S1"});
                worst = std::max(worst, c);
                ++solves;
                if (!(c <= kCmiTol)) out.fail(tag + "CMI " + sci(c));
            } catch (const std::exception& e) {
                out.fail(tag + what(e));
            }
        }
    }
    out.detail = std::to_string(solves) + " joint-form optima; max I(A;B|S) " + sci(worst);
    return out;
}

// ---------------------------------------------------------------------------

pdg::PDG rare_chain(double q, int variant) {
    pdg::PDG m;
    for (const char* n : {"X0", "X1", "X2"}) m.variables.push_back({n, {"0", "1"}});
    std::vector<std::vector<double>> x1 = variant ? std::vector<std::vector<double>>{{0.9, 0.1}, {0.4, 0.6}}
                                                  : std::vector<std::vector<double>>{{0.7, 0.3}, {0.2, 0.8}};
    m.arcs.push_back({"p0", {}, {"X0"}, {{1.0 - q, q}}, 1.0, 1.0});
    m.arcs.push_back({"p1", {"X0"}, {"X1"}, x1, 1.0, 1.0});
    m.arcs.push_back({"p2", {"X1"}, {"X2"}, {{0.6, 0.4}, {0.25, 0.75}}, 1.0, 1.0});
    return m;
}

Outcome conditional_queries() {
    Outcome out;
    double worst = 0.0, worst_claim = 0.0;
    int queries = 0, escalated = 0, worst_slack = 100;
    for (double q : {1e-1, 1e-2, 1e-3, 1e-4}) {
        for (int variant = 0; variant < 2; ++variant) {
            auto m = rare_chain(q, variant);
            auto truth = bn_joint(m);
            struct Q {
                pdg::Event target, given;
                std::vector<std::pair<std::string, int>> t, gv;
            };
            std::vector<Q> qs{{{{"X2", "1"}}, {{"X0", "1"}}, {{"X2", 1}}, {{"X0", 1}}},
                              {{{"X1", "0"}}, {{"X0", "1"}}, {{"X1", 0}}, {{"X0", 1}}},
                              {{{"X0", "1"}}, {{"X2", "1"}}, {{"X0", 1}}, {{"X2", 1}}}};
            for (const auto& qq : qs) {
                std::string tag = "q=" + sci(q) + " variant " + std::to_string(variant) + " ";
                try {
                    auto both = qq.t;
                    both.insert(both.end(), qq.gv.begin(), qq.gv.end());
                    double mu_star = truth.prob(qq.gv);
                    double exact = truth.prob(both) / mu_star;
                    auto r = pdg::query_conditional(m, GammaSpec::positive(1.0), qq.target, qq.given, kQueryEps);
                    double err = std::abs(r.estimate - exact);
                    worst = std::max(worst, err);
                    worst_claim = std::max(worst_claim, r.precision);
                    ++queries;
                    if (!(err <= kQueryEps)) out.fail(tag + "error " + sci(err));
                    // the iteration bound holds for runs of more than one loop
                    // pass; a single pass (no squaring) is its own case. Gate on
                    // passes = escalations + 1, which also bounds escalations.
                    double bound = 2.0 + std::log2(std::log(3.0 / mu_star) / std::log(1.0 / kQueryEps));
                    if (r.escalations > 0) {
                        ++escalated;
                        if (!(r.escalations + 1 <= bound))
                            out.fail(tag + std::to_string(r.escalations) + " escalations, bound " + std::to_string(bound));
                        worst_slack = std::min(worst_slack, static_cast<int>(std::floor(bound)) - r.escalations - 1);
                    }
                } catch (const std::exception& e) {
                    out.fail(tag + what(e));
                }
            }
        }
    }
    out.detail = std::to_string(queries) + " queries at eps " + sci(kQueryEps) + "; max error " + sci(worst) +
                 ", max reported precision " + sci(worst_claim) + "; " + std::to_string(escalated) +
                 " escalated, min slack to the pass bound " + std::to_string(worst_slack);
    return out;
}

// ---------------------------------------------------------------------------

Outcome reduction_consistency() {
    constexpr int kInstances = 20;
    constexpr double kGamma = 0.5;
    Outcome out;
    double worst = 0.0;
    int worst_iter = 0;
    int bound = pdg::search_iteration_bound(kSearchEps);
    for (int k = 0; k < kInstances; ++k) {
        pdgcli::RandomSpec spec{{3, 6}, {2, 2}, {3, 7}, {0, 2}, {1, 2}};
        auto m = pdg::checked(pdgcli::random_pdg(spec, 3000 + static_cast<std::uint64_t>(k)));
        std::string tag = "instance " + std::to_string(k) + " ";
        try {
            pdg::Event ev{{"X0", "1"}};
            auto direct = pdg::query_marginal(pdg::infer(m, GammaSpec::positive(kGamma)).beliefs, ev).estimate;
            auto via = pdg::infer_via_inconsistency(m, kGamma, ev, kSearchEps);
            double d = std::abs(via.estimate - direct);
            worst = std::max(worst, d);
            worst_iter = std::max(worst_iter, via.iterations);
            if (!(d <= 2.0 * kSearchEps)) out.fail(tag + "differs by " + sci(d));
            if (via.iterations > bound) out.fail(tag + std::to_string(via.iterations) + " iterations");
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    out.detail = std::to_string(kInstances) + " instances at eps " + sci(kSearchEps) + "; max difference " +
                 sci(worst) + ", max iterations " + std::to_string(worst_iter) + " (bound " +
                 std::to_string(bound) + ")";
    return out;
}

// ---------------------------------------------------------------------------

namespace conic = pdg::conic;

// minimize sum u_i with u_i >= m_i log(m_i / q_i), sum m = 1, m_i fixed for listed i
conic::ConicProgram entropy_program(const std::vector<double>& q, const std::vector<std::pair<int, double>>& fix) {
    int k = static_cast<int>(q.size());
    std::vector<conic::Triplet> t;
    std::vector<double> rhs;
    int rows = 0;
    for (int i = 0; i < k; ++i) {
        t.emplace_back(rows++, 3 * i, 1.0);
        rhs.push_back(q[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < k; ++i) t.emplace_back(rows, 3 * i + 1, 1.0);
    rhs.push_back(1.0);
    ++rows;
    for (auto [i, v] : fix) {
        t.emplace_back(rows++, 3 * i + 1, 1.0);
        rhs.push_back(v);
    }
    conic::ConicProgram p;
    p.A = conic::SpMat(rows, 3 * k);
    p.A.setFromTriplets(t.begin(), t.end());
    p.b = conic::Vec::Zero(rows);
    for (int i = 0; i < rows; ++i) p.b(i) = rhs[static_cast<std::size_t>(i)];
    p.c = conic::Vec::Zero(3 * k);
    for (int i = 0; i < k; ++i) {
        p.c(3 * i + 2) = -1.0;
        p.cones.add_exp();
    }
    return p;
}

Outcome solver_suite() {
    Outcome out;
    int optima = 0, certs = 0, fd_points = 0;
    double worst_gap = 0.0;
    auto optimal = [&](const conic::ConicSolution& s, const std::string& tag) {
        if (s.status != conic::Status::optimal) {
            out.fail(tag + " ended " + conic::to_string(s.status));
            return false;
        }
        ++optima;
        double gap = std::max(s.gap, std::abs(s.primal_objective - s.dual_objective) / (1.0 + std::abs(s.primal_objective)));
        worst_gap = std::max(worst_gap, gap);
        if (!(s.gap <= kSolverTol)) out.fail(tag + " gap " + sci(s.gap));
        return true;
    };
    // max entropy: -ln n
    for (int n : {2, 3, 5, 10, 40}) {
        auto s = conic::solve(entropy_program(std::vector<double>(static_cast<std::size_t>(n), 1.0), {}), kSolverTol);
        std::string tag = "max-entropy n=" + std::to_string(n);
        if (optimal(s, tag) && !(std::abs(s.primal_objective + std::log(n)) <= 1e-7))
            out.fail(tag + " objective " + std::to_string(s.primal_objective));
    }
    // KL projection onto {m_0 = v}: v log(v/q0) + (1-v) log((1-v)/(1-q0))
    std::mt19937_64 g(11);
    for (int rep = 0; rep < 10; ++rep) {
        int k = 2 + rep % 4;
        std::uniform_real_distribution<double> u(0.05, 1.0);
        std::vector<double> q(static_cast<std::size_t>(k));
        double s = 0.0;
        for (double& x : q) s += (x = u(g));
        for (double& x : q) x /= s;
        double v = std::uniform_real_distribution<double>(0.05, 0.95)(g);
        double want = v * std::log(v / q[0]) + (1 - v) * std::log((1 - v) / (1 - q[0]));
        auto sol = conic::solve(entropy_program(q, {{0, v}}), kSolverTol);
        std::string tag = "kl-projection " + std::to_string(rep);
        if (optimal(sol, tag) && !(std::abs(sol.primal_objective - want) <= 1e-7))
            out.fail(tag + " objective off by " + sci(sol.primal_objective - want));
    }
    // infeasibility certificates
    {
        conic::ConicProgram p;
        p.A = conic::SpMat(1, 1);
        p.A.insert(0, 0) = 1.0;
        p.b = conic::Vec::Constant(1, -1.0);
        p.c = conic::Vec::Zero(1);
        p.cones.add_orthant(1);
        auto s = conic::solve(p, kSolverTol);
        ++certs;
        if (s.status != conic::Status::primal_infeasible) out.fail("x = -1, x >= 0 ended " + conic::to_string(s.status));
    }
    {
        conic::ConicProgram p;
        p.A = conic::SpMat(1, 2);
        p.A.insert(0, 0) = 1.0;
        p.A.insert(0, 1) = -1.0;
        p.b = conic::Vec::Zero(1);
        p.c = conic::Vec::Zero(2);
        p.c(0) = -1.0;
        p.cones.add_orthant(2);
        auto s = conic::solve(p, kSolverTol);
        ++certs;
        if (s.status != conic::Status::dual_infeasible) out.fail("unbounded LP ended " + conic::to_string(s.status));
    }
    {
        // sum m = 1 with m_0 = 2 is impossible for m >= 0 inside the cones
        auto p = entropy_program({0.5, 0.5}, {{0, 2.0}, {1, 0.0}});
        auto s = conic::solve(p, kSolverTol);
        ++certs;
        if (s.status != conic::Status::primal_infeasible) out.fail("infeasible entropy program ended " + conic::to_string(s.status));
    }
    // barrier derivatives against central differences
    std::uniform_real_distribution<double> pos(0.2, 3.0), any(-2.0, 2.0);
    while (fd_points < 200) {
        Eigen::Vector3d x(pos(g), pos(g), any(g));
        if (!conic::in_exp_cone(x) || x(1) * std::log(x(0) / x(1)) - x(2) < 0.05) continue;
        ++fd_points;
        auto e = conic::barrier_exp(x(0), x(1), x(2));
        for (int i = 0; i < 3; ++i) {
            double h = 1e-5 * std::max(1.0, std::abs(x(i)));
            Eigen::Vector3d xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            auto ep = conic::barrier_exp(xp(0), xp(1), xp(2));
            auto em = conic::barrier_exp(xm(0), xm(1), xm(2));
            double fd = (ep.value - em.value) / (2 * h);
            if (!(std::abs(fd - e.gradient(i)) <= kFdRelTol * std::max(1.0, std::abs(e.gradient(i)))))
                out.fail("gradient mismatch at point " + std::to_string(fd_points));
            Eigen::Vector3d col = (ep.gradient - em.gradient) / (2 * h);
            for (int j = 0; j < 3; ++j)
                if (!(std::abs(col(j) - e.hessian(j, i)) <= kFdRelTol * std::max(1.0, std::abs(e.hessian(j, i)))))
                    out.fail("hessian mismatch at point " + std::to_string(fd_points));
        }
    }
    out.detail = std::to_string(optima) + " optima (max gap " + sci(worst_gap) + "), " + std::to_string(certs) +
                 " infeasibility certificates, " + std::to_string(fd_points) + " finite-difference points";
    return out;
}

// ---------------------------------------------------------------------------

double mutual_information(const pdg::JointDistribution& mu) {
    return cmi(mu, {mu.names()[0]}, {mu.names()[1]}, {});
}

Outcome cccp() {
    Outcome out;
    pdg::EngineOptions o;
    o.allow_cccp = true;
    int convex_runs = 0, nonconvex_runs = 0, max_iters = 0;
    double worst_conv = 0.0, worst_rise = 0.0;
    auto ms = corpus(10);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& m = ms[i];
        std::string tag = "instance " + std::to_string(i) + " ";
        try {
            double g = max_convex_gamma(m);
            auto r = pdg::cccp_infer(m, g, o);
            auto direct = pdg::infer(m, GammaSpec::positive(g));
            ++convex_runs;
            if (r.cccp_iterations != 1) out.fail(tag + "convex case took " + std::to_string(r.cccp_iterations) + " iterations");
            if (r.infinite || direct.infinite) {
                if (r.infinite != direct.infinite) out.fail(tag + "CCCP and direct disagree on finiteness");
                continue;
            }
            double d = std::abs(r.inconsistency - direct.inconsistency);
            worst_conv = std::max(worst_conv, d);
            if (!(d <= kCccpObjTol)) out.fail(tag + "convex CCCP off by " + sci(d));
            // beyond the convex range: every arc with alpha > 0 is concave in part
            auto rn = pdg::cccp_infer(m, 2.5 * g + 0.5, o);
            ++nonconvex_runs;
            max_iters = std::max(max_iters, rn.cccp_iterations);
            const auto& f = rn.cccp_objectives;
            for (std::size_t k = 1; k < f.size(); ++k) {
                double rise = f[k] - f[k - 1];
                worst_rise = std::max(worst_rise, rise);
                if (!(rise <= kCccpMonotoneSlack * (1.0 + std::abs(f[k - 1]))))
                    out.fail(tag + "objective rose by " + sci(rise) + " at iteration " + std::to_string(k + 1));
            }
        } catch (const std::exception& e) {
            out.fail(tag + what(e));
        }
    }
    // ->X, Y<- : with beta < gamma alpha the score is beta KL + gamma I(X;Y)
    double worst_mi = 0.0;
    for (double beta : {0.0, 0.5}) {
        pdg::PDG m;
        m.variables = {{"X", {"0", "1"}}, {"Y", {"0", "1"}}};
        m.arcs = {{"x", {}, {"X"}, {{0.7, 0.3}}, 1.0, beta}, {"y", {}, {"Y"}, {{0.2, 0.8}}, 1.0, beta}};
        try {
            auto r = pdg::infer(m, GammaSpec::positive(2.0), o);
            double mi = mutual_information(joint_of(r));
            worst_mi = std::max(worst_mi, mi);
            if (!r.local) out.fail("independence instance was not routed through CCCP");
            if (!(mi <= kMiTol)) out.fail("independence instance (beta=" + std::to_string(beta) + ") MI " + sci(mi));
        } catch (const std::exception& e) {
            out.fail(std::string("independence instance: ") + e.what());
        }
    }
    out.detail = std::to_string(convex_runs) + " convex runs (max |dobj| " + sci(worst_conv) + "), " +
                 std::to_string(nonconvex_runs) + " nonconvex runs (max rise " + sci(worst_rise) +
                 ", max iterations " + std::to_string(max_iters) + "), independence MI " + sci(worst_mi);
    return out;
}

// ---------------------------------------------------------------------------

Outcome smoke() {
    Outcome out;
    pdgcli::KTreeSpec spec;  // n = 20, k = 2
    auto f = pdgcli::random_ktree(spec, 1);
    pdg::EngineOptions o;
    o.td = f.td;
    auto t0 = std::chrono::steady_clock::now();
    try {
        auto r = pdg::infer(f.model, GammaSpec::zero_plus(), o);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!(secs < kSmokeSeconds)) out.fail("took " + std::to_string(secs) + " s");
        out.detail = "width-" + std::to_string(f.td->width()) + ", N=" + std::to_string(f.model.variables.size()) +
                     ", " + std::to_string(f.model.arcs.size()) + " arcs at 0+: " + std::to_string(secs) + " s";
    } catch (const std::exception& e) {
        out.fail(what(e));
    }
    return out;
}

}  // namespace

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {"1", "oracle equivalence", oracle_equivalence},
        {"2", "joint/cluster agreement", joint_cluster_agreement},
        {"3", "BN embedding", bn_embedding},
        {"4", "#SAT identity", sharp_sat},
        {"5", "0+ pipeline", zero_plus_pipeline},
        {"6", "entropy decomposition", entropy_decomposition},
        {"7", "Markov property", markov_property},
        {"8", "conditional query loop", conditional_queries},
        {"9", "reduction consistency", reduction_consistency},
        {"10", "solver unit suite", solver_suite},
        {"11", "CCCP", cccp},
        {"smoke", "smoke benchmark", smoke},
    };
    return all;
}

}  // namespace acc
