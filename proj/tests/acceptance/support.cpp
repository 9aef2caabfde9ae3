#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "pdgcli/gen.hpp"

namespace acc {

void Outcome::fail(const std::string& why) {
    pass = false;
    if (failures.size() < 8) failures.push_back(why);
}

std::optional<pdg::PDG> corpus_instance(std::uint64_t seed, int max_width) {
    pdgcli::RandomSpec spec{{4, 8}, {2, 2}, {4, 10}, {0, 2}, {1, 2}};
    auto m = pdgcli::random_pdg(spec, seed);
    if (pdg::build_decomposition(m, pdg::DecompMethod::min_fill).width() > max_width) return std::nullopt;
    std::mt19937_64 g(seed * 0x9e3779b97f4a7c15ULL + 17);
    const double alphas[] = {0.0, 0.5, 1.0, 1.0, 1.0, 2.0, 2.0, 0.5};
    std::uniform_real_distribution<double> beta(0.5, 2.0), u(0.0, 1.0);
    for (auto& a : m.arcs) {
        a.alpha = alphas[std::uniform_int_distribution<int>(0, 7)(g)];
        a.beta = beta(g);
        if (u(g) < 0.15)
            for (auto& row : a.cpd) {
                if (row.size() < 2) continue;
                row[std::uniform_int_distribution<std::size_t>(0, row.size() - 1)(g)] = 0.0;
                double s = std::accumulate(row.begin(), row.end(), 0.0);
                for (double& p : row) p /= s;
            }
    }
    return pdg::checked(m);
}

std::vector<pdg::PDG> corpus(int count, int max_width) {
    std::vector<pdg::PDG> out;
    for (std::uint64_t seed = 1; static_cast<int>(out.size()) < count; ++seed)
        if (auto m = corpus_instance(seed, max_width)) out.push_back(std::move(*m));
    return out;
}

double max_convex_gamma(const pdg::PDG& m) {
    double g = pdg::kInf;
    for (const auto& a : m.arcs)
        if (a.alpha > 0.0) g = std::min(g, a.beta / a.alpha);
    return std::isfinite(g) ? g : 1.0;
}

double tv(const pdg::JointDistribution& a, const pdg::JointDistribution& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

pdg::JointDistribution joint_of(const pdg::InferenceReport& r) {
    return pdg::joint_from_beliefs(r.beliefs.model, r.beliefs.rct.td, r.beliefs.mu);
}

double cmi(const pdg::JointDistribution& mu, const std::vector<std::string>& a,
           const std::vector<std::string>& b, const std::vector<std::string>& s) {
    std::vector<std::string> abs = a, as = a, bs = b;
    abs.insert(abs.end(), b.begin(), b.end());
    abs.insert(abs.end(), s.begin(), s.end());
    as.insert(as.end(), s.begin(), s.end());
    bs.insert(bs.end(), s.begin(), s.end());
    auto pabs = mu.marginal(abs), pas = mu.marginal(as), pbs = mu.marginal(bs), ps = mu.marginal(s);
    std::size_t nA = 1, nB = 1, nS = 1;
    for (std::size_t i = 0; i < a.size(); ++i) nA *= pabs.cards()[i];
    for (std::size_t i = 0; i < b.size(); ++i) nB *= pabs.cards()[a.size() + i];
    for (std::size_t i = 0; i < s.size(); ++i) nS *= pabs.cards()[a.size() + b.size() + i];
    double total = 0.0;
    for (std::size_t x = 0; x < nA; ++x)
        for (std::size_t y = 0; y < nB; ++y)
            for (std::size_t z = 0; z < nS; ++z) {
                double p = pabs[(x * nB + y) * nS + z];
                if (!(p > 0.0)) continue;
                total += p * std::log(p * ps[z] / (pas[x * nS + z] * pbs[y * nS + z]));
            }
    return total;
}

pdg::JointDistribution bn_joint(const pdg::PDG& m) {
    auto cards = m.cards();
    std::vector<int> all(m.variables.size());
    std::iota(all.begin(), all.end(), 0);
    pdg::Domain w(all, cards);
    std::vector<double> p(w.size(), 1.0);
    for (std::size_t x = 0; x < w.size(); ++x) {
        auto full = w.decode(x);
        for (std::size_t a = 0; a < m.arcs.size(); ++a) {
            pdg::Domain ds(m.sources_of(a), cards), dt(m.targets_of(a), cards);
            p[x] *= m.arcs[a].cpd[ds.project(full)][dt.project(full)];
        }
    }
    return pdg::JointDistribution::over(m, p);
}

namespace {

bool usable(const pdg::conic::ConicSolution& s) {
    if (s.status == pdg::conic::Status::optimal) return true;
    return s.status == pdg::conic::Status::max_iter &&
           std::max({s.primal_residual, s.dual_residual, s.gap}) <= 1e-6;
}

}  // namespace

JointSolve joint_solve(const pdg::PDG& m, const pdg::GammaSpec& g, double tol) {
    JointSolve out;
    auto one = g.kind == pdg::GammaSpec::Kind::positive ? pdg::compile_joint_small_gamma(m, g.gamma)
                                                         : pdg::compile_joint_inc(m);
    if (one.infeasible) {
        out.status = "infeasible";
        return out;
    }
    auto s1 = pdg::conic::solve(one.program, tol);
    out.status = pdg::conic::to_string(s1.status);
    if (!usable(s1)) return out;
    out.objective = s1.primal_objective;
    out.mu = pdg::JointDistribution::over(m, pdg::beliefs_from(one, s1.x)[0]);
    if (g.kind != pdg::GammaSpec::Kind::zero_plus) {
        out.ok = true;
        return out;
    }
    auto two = pdg::compile_joint_zero_plus(m, pdg::freeze_marginals(m, out.mu));
    if (two.infeasible) {
        out.status = "stage two infeasible";
        return out;
    }
    auto s2 = pdg::conic::solve(two.program, tol);
    out.status = pdg::conic::to_string(s2.status);
    if (!usable(s2)) return out;
    out.mu = pdg::JointDistribution::over(m, pdg::beliefs_from(two, s2.x)[0]);
    out.ok = true;
    return out;
}

pdg::Cnf random_3cnf(int n, int m, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::vector<int> vars(static_cast<std::size_t>(n));
    std::iota(vars.begin(), vars.end(), 1);
    while (true) {
        pdg::Cnf f;
        f.nvars = n;
        for (int j = 0; j < m; ++j) {
            std::shuffle(vars.begin(), vars.end(), g);
            std::vector<int> cl;
            for (int k = 0; k < 3; ++k) cl.push_back(std::bernoulli_distribution(0.5)(g) ? vars[k] : -vars[k]);
            f.clauses.push_back(std::move(cl));
        }
        if (pdg::count_models(f) > 0) return f;
    }
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

}  // namespace acc
