#include "pdg/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace pdg {

namespace {

constexpr double kUndefinedMass = 1e-9;

// Arc bookkeeping over the explicit world space. Kept separate from the
// compiler on purpose so the two paths share nothing but the model.
struct WorldArc {
    double alpha = 1.0, beta = 1.0;
    std::size_t ns = 1, nt = 1;
    std::vector<std::size_t> st_of;  // per world: s * nt + t
    std::vector<std::size_t> s_of;
    std::vector<double> logp;        // per (s,t); -inf where p = 0
};

struct Worlds {
    std::size_t W = 0;
    std::vector<WorldArc> arcs;
    std::vector<char> live;  // finite score possible
};

Worlds build_worlds(const PDG& m, std::size_t max_worlds) {
    std::size_t W = m.world_count();
    if (W > max_worlds) throw SizeError("state space too large for the brute-force oracle");
    Worlds w;
    w.W = W;
    std::vector<int> all(m.variables.size());
    std::iota(all.begin(), all.end(), 0);
    auto cards = m.cards();
    Domain dom(all, cards);
    w.live.assign(W, 1);
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        WorldArc wa;
        wa.alpha = arc.alpha;
        wa.beta = arc.beta;
        Domain ds(m.sources_of(a), cards), dt(m.targets_of(a), cards);
        wa.ns = ds.size();
        wa.nt = dt.size();
        wa.logp.resize(wa.ns * wa.nt);
        for (std::size_t s = 0; s < wa.ns; ++s)
            for (std::size_t t = 0; t < wa.nt; ++t) {
                double p = arc.cpd[s][t];
                wa.logp[s * wa.nt + t] = p > 0.0 ? std::log(p) : -kInf;
            }
        wa.st_of.resize(W);
        wa.s_of.resize(W);
        for (std::size_t x = 0; x < W; ++x) {
            auto full = dom.decode(x);
            std::size_t s = ds.project(full), t = dt.project(full);
            wa.s_of[x] = s;
            wa.st_of[x] = s * wa.nt + t;
            if (arc.beta > 0.0 && arc.cpd[s][t] <= 0.0) w.live[x] = 0;
        }
        w.arcs.push_back(std::move(wa));
    }
    return w;
}

// f(mu) = sum_a [(beta - g alpha) sum mu(s,t) log mu(t|s) - beta E log p]
//         + g sum mu log mu + sum_x mu(x) lin(x)
// which is the gamma score when lin = 0. Dead worlds must carry zero mass.
struct Objective {
    const Worlds& w;
    double gamma;
    std::vector<double> lin;  // optional extra linear term
    bool use_arcs = true;

    double value(const std::vector<double>& mu) const {
        double f = 0.0;
        if (use_arcs)
            for (const auto& a : w.arcs) {
                std::vector<double> mst(a.ns * a.nt, 0.0), ms(a.ns, 0.0);
                for (std::size_t x = 0; x < w.W; ++x) {
                    mst[a.st_of[x]] += mu[x];
                    ms[a.s_of[x]] += mu[x];
                }
                double coef = a.beta - gamma * a.alpha;
                for (std::size_t j = 0; j < mst.size(); ++j) {
                    if (mst[j] <= 0.0) continue;
                    f += coef * mst[j] * std::log(mst[j] / ms[j / a.nt]);
                    if (a.beta > 0.0) f -= a.beta * mst[j] * a.logp[j];
                }
            }
        for (std::size_t x = 0; x < w.W; ++x) {
            if (mu[x] > 0.0) f += gamma * mu[x] * std::log(mu[x]);
            if (!lin.empty()) f += lin[x] * mu[x];
        }
        return f;
    }

    void gradient(const std::vector<double>& mu, std::vector<double>& g) const {
        g.assign(w.W, 0.0);
        if (use_arcs)
            for (const auto& a : w.arcs) {
                std::vector<double> mst(a.ns * a.nt, 0.0), ms(a.ns, 0.0);
                for (std::size_t x = 0; x < w.W; ++x) {
                    mst[a.st_of[x]] += mu[x];
                    ms[a.s_of[x]] += mu[x];
                }
                double coef = a.beta - gamma * a.alpha;
                std::vector<double> gj(mst.size(), 0.0);
                for (std::size_t j = 0; j < mst.size(); ++j) {
                    double lc = mst[j] > 0.0 ? std::log(mst[j] / ms[j / a.nt]) : -745.0;
                    gj[j] = coef * lc;
                    if (a.beta > 0.0 && std::isfinite(a.logp[j])) gj[j] -= a.beta * a.logp[j];
                }
                for (std::size_t x = 0; x < w.W; ++x) g[x] += gj[a.st_of[x]];
            }
        for (std::size_t x = 0; x < w.W; ++x) {
            if (gamma > 0.0) g[x] += gamma * (std::log(std::max(mu[x], 1e-300)) + 1.0);
            if (!lin.empty()) g[x] += lin[x];
        }
    }

    // Hessian restricted to the listed coordinates.
    Eigen::MatrixXd hessian(const std::vector<double>& mu, const std::vector<std::size_t>& idx) const {
        std::size_t L = idx.size();
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
        if (use_arcs)
            for (const auto& a : w.arcs) {
                double coef = a.beta - gamma * a.alpha;
                if (coef == 0.0) continue;
                std::vector<double> mst(a.ns * a.nt, 0.0), ms(a.ns, 0.0);
                for (std::size_t x = 0; x < w.W; ++x) {
                    mst[a.st_of[x]] += mu[x];
                    ms[a.s_of[x]] += mu[x];
                }
                for (std::size_t i = 0; i < L; ++i)
                    for (std::size_t j = 0; j < L; ++j) {
                        std::size_t xi = idx[i], xj = idx[j];
                        double h = 0.0;
                        if (a.st_of[xi] == a.st_of[xj]) h += 1.0 / mst[a.st_of[xi]];
                        if (a.s_of[xi] == a.s_of[xj]) h -= 1.0 / ms[a.s_of[xi]];
                        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += coef * h;
                    }
            }
        if (gamma > 0.0)
            for (std::size_t i = 0; i < L; ++i)
                H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += gamma / mu[idx[i]];
        return H;
    }
};

std::vector<double> mirror_descent(const Objective& f, std::vector<double> mu, const OracleOptions& o) {
    std::vector<double> g;
    double prev = f.value(mu);
    for (int t = 0; t < o.iterations; ++t) {
        f.gradient(mu, g);
        double eta = o.step / (1.0 + t);
        double gmin = kInf;
        for (std::size_t x = 0; x < mu.size(); ++x)
            if (mu[x] > 0.0) gmin = std::min(gmin, g[x]);
        double tot = 0.0;
        for (std::size_t x = 0; x < mu.size(); ++x) {
            if (mu[x] > 0.0) mu[x] *= std::exp(-eta * (g[x] - gmin));
            tot += mu[x];
        }
        for (double& v : mu) v /= tot;
        // mass that underflows is put back at a tiny level so the support
        // never shrinks by accident
        for (double& v : mu)
            if (v > 0.0 && v < 1e-300) v = 1e-300;
        if (t % 500 == 499) {
            double cur = f.value(mu);
            if (std::abs(prev - cur) < 1e-15 * (1.0 + std::abs(cur))) break;
            prev = cur;
        }
    }
    return mu;
}

// Log-barrier Newton on {mu >= 0, sum mu = 1, E mu = 0} over the live
// worlds: minimizes f - t sum log mu for t = 1e-4 down to 1e-14. Mirror
// descent alone cannot reach optima with many zero worlds (typical at
// gamma = 0); the barrier path gets there with error about W t.
std::vector<double> barrier_newton(const Objective& f, std::vector<double> mu,
                                   const std::vector<std::vector<double>>& extra_rows) {
    std::vector<std::size_t> idx;
    for (std::size_t x = 0; x < mu.size(); ++x)
        if (mu[x] > 0.0) idx.push_back(x);
    auto L = static_cast<Eigen::Index>(idx.size());
    if (L <= 1) return mu;
    if (extra_rows.empty()) {
        // only the simplex row: pull entries off the boundary
        double tot = 0.0;
        for (auto x : idx) tot += (mu[x] = std::max(mu[x], 1e-12));
        for (auto x : idx) mu[x] /= tot;
    }
    auto R = static_cast<Eigen::Index>(1 + extra_rows.size());
    Eigen::MatrixXd E(R, L);
    E.row(0).setOnes();
    for (std::size_t r = 0; r < extra_rows.size(); ++r)
        for (Eigen::Index i = 0; i < L; ++i) E(static_cast<Eigen::Index>(r) + 1, i) = extra_rows[r][idx[i]];

    auto phi = [&](const std::vector<double>& v, double t) {
        double s = f.value(v);
        for (auto x : idx) s -= t * std::log(v[x]);
        return s;
    };
    // the simplex plus homogeneous rows: rescaling keeps a point feasible.
    // At gamma = 0 the objective is 1-homogeneous, H is near singular along mu
    // and the solve drifts off E d = 0, so directions are projected back.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> eet(E * E.transpose());
    eet.setThreshold(1e-12);
    auto renormalize = [&](std::vector<double>& v) {
        double tot = 0.0;
        for (auto x : idx) tot += v[x];
        for (auto x : idx) v[x] /= tot;
    };
    std::vector<double> g;
    for (double t = 1e-4; t >= 1e-14; t *= 0.01) {
        double pv = phi(mu, t);
        for (int it = 0; it < 60; ++it) {
            f.gradient(mu, g);
            Eigen::VectorXd gl(L);
            for (Eigen::Index i = 0; i < L; ++i) gl(i) = g[idx[i]] - t / mu[idx[i]];
            Eigen::MatrixXd H = f.hessian(mu, idx);
            for (Eigen::Index i = 0; i < L; ++i) H(i, i) += t / (mu[idx[i]] * mu[idx[i]]);
            Eigen::LLT<Eigen::MatrixXd> llt(H);
            double reg = 0.0;
            while (llt.info() != Eigen::Success) {
                reg = reg == 0.0 ? 1e-12 * std::max(1.0, H.diagonal().maxCoeff()) : reg * 100.0;
                llt.compute(H + reg * Eigen::MatrixXd::Identity(L, L));
                if (reg > 1e6) return mu;
            }
            // KKT: H d + E' lam = -g, E d = 0
            Eigen::MatrixXd HiEt = llt.solve(E.transpose());
            Eigen::VectorXd Hig = llt.solve(gl);
            Eigen::MatrixXd S = E * HiEt;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(S);
            cod.setThreshold(1e-12);
            Eigen::VectorXd lam = cod.solve(-(E * Hig));
            Eigen::VectorXd d = -(Hig + HiEt * lam);
            d -= E.transpose() * eet.solve(E * d);
            double dec = -gl.dot(d);
            if (!(dec > 1e-15 * (1.0 + std::abs(pv)))) break;
            double step = 1.0;
            for (Eigen::Index i = 0; i < L; ++i)
                if (d(i) < 0.0) step = std::min(step, -0.99 * mu[idx[i]] / d(i));
            std::vector<double> cand = mu;
            bool moved = false;
            for (int k = 0; k < 60; ++k) {
                for (Eigen::Index i = 0; i < L; ++i) cand[idx[i]] = mu[idx[i]] + step * d(i);
                renormalize(cand);
                double pc = phi(cand, t);
                if (pc <= pv - 1e-4 * step * dec) {
                    mu = cand;
                    pv = pc;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }
    return mu;
}

std::vector<double> random_start(const std::vector<char>& live, std::mt19937_64& rng, bool uniform) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mu(live.size(), 0.0);
    double tot = 0.0;
    for (std::size_t x = 0; x < live.size(); ++x)
        if (live[x]) {
            mu[x] = uniform ? 1.0 : std::exp(2.0 * u(rng));
            tot += mu[x];
        }
    for (double& v : mu) v /= tot;
    return mu;
}

std::vector<double> minimize(const Objective& f, const std::vector<char>& live, const OracleOptions& o,
                             const std::vector<std::vector<double>>& extra_rows,
                             const std::vector<double>* start) {
    std::mt19937_64 rng(o.seed);
    std::vector<double> best;
    double best_f = kInf;
    int runs = start ? 1 : std::max(1, o.restarts);
    for (int r = 0; r < runs; ++r) {
        std::vector<double> mu = start ? *start : random_start(live, rng, r == 0);
        if (extra_rows.empty()) mu = mirror_descent(f, mu, o);
        double v = f.value(mu);
        if (v < best_f) {
            best_f = v;
            best = mu;
        }
    }
    // polish only the winner; the objective is convex wherever the oracle is
    // used as a reference
    if (o.polish && live.size() <= o.max_newton_worlds) best = barrier_newton(f, best, extra_rows);
    return best;
}

}  // namespace

JointDistribution zero_plus_stage_two(const PDG& m, const JointDistribution& nu, const OracleOptions& o) {
    Worlds w = build_worlds(m, o.max_worlds);
    // k(x) = prod_a nu(t|s)^alpha, uniform rows where nu(s) is negligible;
    // on the constraint set SInc equals sum mu log(mu / k)
    Objective f{w, 1.0, std::vector<double>(w.W, 0.0), false};
    std::vector<std::vector<double>> rows;
    for (const auto& a : w.arcs) {
        std::vector<double> mst(a.ns * a.nt, 0.0), ms(a.ns, 0.0);
        for (std::size_t x = 0; x < w.W; ++x) {
            mst[a.st_of[x]] += nu[x];
            ms[a.s_of[x]] += nu[x];
        }
        for (std::size_t x = 0; x < w.W; ++x) {
            double ns = ms[a.s_of[x]];
            double c = ns > kUndefinedMass ? mst[a.st_of[x]] / ns : 1.0 / static_cast<double>(a.nt);
            if (a.alpha != 0.0) f.lin[x] -= a.alpha * std::log(std::max(c, 1e-300));
        }
        for (std::size_t s = 0; s < a.ns; ++s) {
            if (!(ms[s] > kUndefinedMass)) continue;
            for (std::size_t t = 0; t < a.nt; ++t) {
                std::vector<double> row(w.W, 0.0);
                for (std::size_t x = 0; x < w.W; ++x) {
                    if (a.st_of[x] == s * a.nt + t) row[x] += ms[s];
                    if (a.s_of[x] == s) row[x] -= mst[s * a.nt + t];
                }
                // unit scale, or the rank cut in the KKT solve eats small-mass rows
                double sc = 0.0;
                for (double v : row) sc = std::max(sc, std::abs(v));
                if (!(sc > 0.0)) continue;
                for (double& v : row) v /= sc;
                rows.push_back(std::move(row));
            }
        }
    }
    std::vector<char> live(w.W, 0);
    // the barrier path ends near the analytic center of the optimal face, so a
    // world with negligible stage-one mass has none in any OInc minimizer
    for (std::size_t x = 0; x < w.W; ++x) live[x] = nu[x] > kUndefinedMass;
    std::vector<double> start = nu.probs();
    double tot = 0.0;
    for (std::size_t x = 0; x < w.W; ++x) tot += (start[x] = live[x] ? start[x] : 0.0);
    for (double& v : start) v /= tot;
    auto mu = minimize(f, live, o, rows, &start);
    return JointDistribution(nu.names(), nu.cards(), mu);
}

OracleResult brute_force_optimum(const PDG& m, const GammaSpec& gamma, const OracleOptions& o) {
    for (const auto& a : m.arcs)
        if (!std::isfinite(a.beta)) throw DomainError("infinite beta is not supported");
    Worlds w = build_worlds(m, o.max_worlds);
    OracleResult res;
    if (std::none_of(w.live.begin(), w.live.end(), [](char c) { return c != 0; })) {
        res.finite = false;
        res.score = kInf;
        res.oinc = kInf;
        res.mu = JointDistribution::uniform(m);
        return res;
    }
    double g = gamma.value();
    Objective f{w, g, {}, true};
    auto mu = minimize(f, w.live, o, {}, nullptr);
    auto joint = JointDistribution::over(m, mu);
    if (gamma.kind == GammaSpec::Kind::zero_plus) {
        res.score = oinc(m, joint);
        joint = zero_plus_stage_two(m, joint, o);
    } else {
        res.score = score_gamma(m, joint, g);
    }
    res.mu = joint;
    res.oinc = oinc(m, joint);
    res.sinc = sinc(m, joint);
    return res;
}

JointDistribution joint_from_beliefs(const PDG& m, const TreeDecomposition& td,
                                     const std::vector<std::vector<double>>& beliefs) {
    std::size_t W = m.world_count();
    if (W > (std::size_t{1} << 22)) throw SizeError("state space too large to reconstruct");
    auto cards = m.cards();
    std::vector<int> all(m.variables.size());
    std::iota(all.begin(), all.end(), 0);
    Domain dom(all, cards);
    std::vector<Domain> cd;
    for (const auto& c : td.clusters) cd.emplace_back(c, cards);
    struct Sep {
        Domain d;
        std::vector<double> p;
    };
    std::vector<Sep> seps;
    for (auto [i, j] : td.edges) {
        std::vector<int> s;
        std::set_intersection(td.clusters[i].begin(), td.clusters[i].end(), td.clusters[j].begin(),
                              td.clusters[j].end(), std::back_inserter(s));
        Sep sp{Domain(s, cards), {}};
        sp.p.assign(sp.d.size(), 0.0);
        std::vector<int> full(m.variables.size(), 0);
        for (std::size_t c = 0; c < cd[i].size(); ++c) {
            auto vals = cd[i].decode(c);
            for (std::size_t k = 0; k < vals.size(); ++k) full[cd[i].vars()[k]] = vals[k];
            sp.p[sp.d.project(full)] += beliefs[i][c];
        }
        seps.push_back(std::move(sp));
    }
    std::vector<double> probs(W, 0.0);
    double tot = 0.0;
    for (std::size_t x = 0; x < W; ++x) {
        auto full = dom.decode(x);
        double num = 1.0;
        for (std::size_t C = 0; C < cd.size() && num > 0.0; ++C) num *= beliefs[C][cd[C].project(full)];
        if (!(num > 0.0)) continue;
        double den = 1.0;
        for (const auto& s : seps) den *= s.p[s.d.project(full)];
        probs[x] = den > 0.0 ? num / den : 0.0;
        tot += probs[x];
    }
    // beliefs that are calibrated only to solver tolerance give a total
    // slightly off one
    if (tot > 0.0)
        for (double& v : probs) v /= tot;
    return JointDistribution::over(m, std::move(probs));
}

std::vector<std::vector<double>> beliefs_of_joint(const PDG& m, const TreeDecomposition& td,
                                                  const JointDistribution& mu) {
    std::vector<std::vector<double>> out;
    auto cards = m.cards();
    std::vector<int> all(m.variables.size());
    std::iota(all.begin(), all.end(), 0);
    Domain dom(all, cards);
    for (const auto& c : td.clusters) {
        Domain d(c, cards);
        std::vector<double> p(d.size(), 0.0);
        for (std::size_t x = 0; x < mu.size(); ++x) p[d.project(dom.decode(x))] += mu[x];
        out.push_back(std::move(p));
    }
    return out;
}

Cnf parse_dimacs(std::istream& is) {
    Cnf f;
    std::string line;
    bool header = false;
    std::vector<int> cur;
    int declared = -1;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "c" || first[0] == '%') continue;
        if (first == "p") {
            std::string fmt;
            if (!(ls >> fmt >> f.nvars >> declared) || fmt != "cnf" || f.nvars < 0 || declared < 0)
                throw DomainError("bad DIMACS header");
            header = true;
            continue;
        }
        if (!header) throw DomainError("DIMACS clause before header");
        std::istringstream all(line);
        int lit;
        while (all >> lit) {
            if (lit == 0) {
                f.clauses.push_back(cur);
                cur.clear();
                continue;
            }
            if (std::abs(lit) > f.nvars) throw DomainError("literal out of range: " + std::to_string(lit));
            cur.push_back(lit);
        }
        if (!all.eof()) throw DomainError("bad token in DIMACS clause");
    }
    if (!header) throw DomainError("missing DIMACS header");
    if (!cur.empty()) f.clauses.push_back(cur);
    if (declared >= 0 && static_cast<int>(f.clauses.size()) != declared)
        throw DomainError("clause count does not match header");
    return f;
}

PDG encode_cnf(const Cnf& f, int max_width) {
    PDG m;
    for (int i = 1; i <= f.nvars; ++i) m.variables.push_back({"x" + std::to_string(i), {"0", "1"}});
    for (std::size_t j = 0; j < f.clauses.size(); ++j)
        m.variables.push_back({"c" + std::to_string(j + 1), {"0", "1"}});
    for (std::size_t j = 0; j < f.clauses.size(); ++j) {
        const auto& cl = f.clauses[j];
        std::vector<int> vars;
        for (int lit : cl) vars.push_back(std::abs(lit));
        std::sort(vars.begin(), vars.end());
        vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
        if (static_cast<int>(vars.size()) > max_width)
            throw DomainError("clause " + std::to_string(j + 1) + " wider than " + std::to_string(max_width));
        Hyperarc orr;
        orr.id = "or" + std::to_string(j + 1);
        for (int v : vars) orr.sources.push_back("x" + std::to_string(v));
        std::string cname = "c" + std::to_string(j + 1);
        orr.targets = {cname};
        std::size_t ns = std::size_t{1} << vars.size();
        for (std::size_t s = 0; s < ns; ++s) {
            // sources are row-major, the last variable is the low bit
            bool sat = false;
            for (int lit : cl) {
                auto pos = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), std::abs(lit)) - vars.begin());
                bool val = (s >> (vars.size() - 1 - pos)) & 1u;
                if ((lit > 0) == val) sat = true;
            }
            orr.cpd.push_back(sat ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0});
        }
        m.arcs.push_back(std::move(orr));
        Hyperarc one;
        one.id = "assert" + std::to_string(j + 1);
        one.targets = {cname};
        one.cpd = {{0.0, 1.0}};
        m.arcs.push_back(std::move(one));
    }
    return m;
}

PDG encode_cnf_uniform(const Cnf& f, int max_width) {
    PDG m = encode_cnf(f, max_width);
    Hyperarc u;
    u.id = "uniform";
    for (const auto& v : m.variables) u.targets.push_back(v.name);
    std::size_t W = m.world_count();
    u.cpd = {std::vector<double>(W, 1.0 / static_cast<double>(W))};
    m.arcs.push_back(std::move(u));
    return m;
}

std::uint64_t count_models(const Cnf& f) {
    if (f.nvars > 20) throw SizeError("model counting is limited to 20 variables");
    std::uint64_t count = 0;
    std::uint64_t n = std::uint64_t{1} << f.nvars;
    for (std::uint64_t a = 0; a < n; ++a) {
        bool ok = true;
        for (const auto& cl : f.clauses) {
            bool sat = false;
            for (int lit : cl) {
                bool val = (a >> (std::abs(lit) - 1)) & 1u;
                if ((lit > 0) == val) {
                    sat = true;
                    break;
                }
            }
            if (!sat) {
                ok = false;
                break;
            }
        }
        if (ok) ++count;
    }
    return count;
}

}  // namespace pdg
