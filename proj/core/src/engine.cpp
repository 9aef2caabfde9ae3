#include "pdg/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace pdg {

namespace {

constexpr double kDeltaFloor = 1e-300;

PDG prepare(const PDG& in) {
    for (const auto& a : in.arcs)
        if (!std::isfinite(a.beta))
            throw UnsupportedError("arc '" + a.id + "' has infinite beta; only finite weights are supported");
    return checked(in);
}

RootedClusterTree make_tree(const PDG& m, const EngineOptions& o) {
    TreeDecomposition td;
    if (o.td) {
        td = *o.td;
        auto err = check_decomposition(m, td);
        if (!err.empty()) throw DecompositionError(err);
    } else {
        td = build_decomposition(m, o.method);
    }
    return root_and_assign(td, m);
}

bool usable(const conic::ConicSolution& s) {
    if (s.status == conic::Status::optimal) return true;
    // a stalled run that got close is still informative; its residuals feed
    // the reported precision
    return s.status == conic::Status::max_iter &&
           std::max({s.primal_residual, s.dual_residual, s.gap}) <= 1e-6;
}

conic::ConicSolution run(const CompiledProblem& cp, double tol, const EngineOptions& o,
                         const std::string& stage, std::vector<SolveStats>& stats) {
    auto so = o.solver;
    so.tol = std::max(tol, o.tol_floor);
    auto t0 = std::chrono::steady_clock::now();
    auto sol = conic::solve(cp.program, so);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats.push_back({stage, conic::to_string(sol.status), cp.program.n(), cp.program.m(), sol.iterations,
                     sol.gap, sol.primal_residual, sol.dual_residual, secs});
    return sol;
}

std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

void require_usable(const conic::ConicSolution& s, const std::string& stage) {
    if (!usable(s))
        throw SolverError(stage + ": solver ended with status " + conic::to_string(s.status) +
                          " (gap " + fmt_sci(s.gap) + ", primal residual " + fmt_sci(s.primal_residual) +
                          ", dual residual " + fmt_sci(s.dual_residual) + ")");
}

double calibration_residual(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu) {
    auto D = cluster_domains(m, rct.td);
    auto cards = m.cards();
    double worst = 0.0;
    for (std::size_t C = 0; C < rct.size(); ++C) {
        int P = rct.parent[C];
        if (P < 0) continue;
        Domain sep(rct.vcp[C], cards);
        auto a = marginalize(D[C], mu[C], sep, m.variables.size());
        auto b = marginalize(D[P], mu[P], sep, m.variables.size());
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
        worst = std::max(worst, d);
    }
    return worst;
}

CalibratedBeliefs make_beliefs(const PDG& m, const RootedClusterTree& rct, const CompiledProblem& cp,
                               const conic::ConicSolution& sol, double gamma = 0.0) {
    CalibratedBeliefs cb;
    cb.model = m;
    cb.rct = rct;
    cb.mu = beliefs_from(cp, sol.x);
    cb.calibration_residual = calibration_residual(m, rct, cb.mu);
    cb.precision = belief_precision(cp.size.vc, sol);
    cb.certified = certified_precision(gamma, sol);
    return cb;
}

std::vector<std::pair<int, int>> resolve(const PDG& m, const Event& e) {
    std::vector<std::pair<int, int>> out;
    std::set<int> seen;
    for (const auto& [name, value] : e) {
        int v = m.index_of(name);
        if (v < 0) throw DomainError("unknown variable '" + name + "'");
        int k = m.value_index(v, value);
        if (k < 0) throw DomainError("variable '" + name + "' has no value '" + value + "'");
        if (!seen.insert(v).second) throw DomainError("variable '" + name + "' repeated in event");
        out.emplace_back(v, k);
    }
    return out;
}

std::vector<std::vector<double>> arc_table(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu,
                                           std::size_t a) {
    auto cards = m.cards();
    int C = rct.arc_cluster[a];
    Domain host(rct.td.clusters[C], cards);
    Domain scope(m.scope_of(a), cards);
    auto joint = marginalize(host, mu[C], scope, m.variables.size());
    std::size_t nt = Domain(m.targets_of(a), cards).size();
    std::size_t ns = joint.size() / nt;
    std::vector<std::vector<double>> t(ns, std::vector<double>(nt));
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t j = 0; j < nt; ++j) t[s][j] = joint[s * nt + j];
    return t;
}

}  // namespace

double belief_precision(std::size_t vc, const conic::ConicSolution& s) {
    double r = std::max({s.gap, s.primal_residual, s.dual_residual});
    return kResidualToError * std::sqrt(static_cast<double>(vc)) * r;
}

double certified_precision(double gamma, const conic::ConicSolution& s) {
    if (!(gamma > 0.0)) return kInf;
    // suboptimality from the duality gap, padded by the residuals since the
    // iterate is only approximately feasible
    double sub = std::abs(s.primal_objective - s.dual_objective) + s.primal_residual + s.dual_residual;
    return std::min(1.0, std::sqrt(sub / (2.0 * gamma)));
}

int search_iteration_bound(double eps) {
    return static_cast<int>(std::ceil(std::log(1.0 / eps) / std::log(4.0 / 3.0)));
}

double oinc_from_beliefs(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu) {
    double total = 0.0;
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        if (arc.beta == 0.0) continue;
        auto t = arc_table(m, rct, mu, a);
        double kl = 0.0;
        for (std::size_t s = 0; s < t.size(); ++s) {
            double ms = 0.0;
            for (double v : t[s]) ms += v;
            for (std::size_t j = 0; j < t[s].size(); ++j) {
                double q = t[s][j];
                if (q <= 0.0) continue;
                if (arc.cpd[s][j] <= 0.0) return kInf;
                kl += q * std::log(q / (arc.cpd[s][j] * ms));
            }
        }
        total += arc.beta * kl;
    }
    return total;
}

double score_from_beliefs(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu, double gamma) {
    double o = oinc_from_beliefs(m, rct, mu);
    if (std::isinf(o) || gamma == 0.0) return o;
    double s = -entropy_vcp(m, rct, mu);
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        if (m.arcs[a].alpha == 0.0) continue;
        auto t = arc_table(m, rct, mu, a);
        double h = 0.0;
        for (const auto& row : t) {
            double ms = 0.0;
            for (double v : row) ms += v;
            for (double v : row)
                if (v > 0.0) h -= v * std::log(v / ms);
        }
        s += m.arcs[a].alpha * h;
    }
    return o + gamma * s;
}

InferenceReport infer(const PDG& input, const GammaSpec& gamma, const EngineOptions& o) {
    PDG m = prepare(input);
    if (gamma.kind == GammaSpec::Kind::zero_plus && !is_proper(m))
        throw UnsupportedError("0+ inference needs a proper PDG (beta >= 0, and beta > 0 wherever alpha > 0)");
    if (gamma.kind == GammaSpec::Kind::positive) {
        double g = gamma.gamma;
        bool convex = std::all_of(m.arcs.begin(), m.arcs.end(),
                                  [g](const Hyperarc& a) { return a.beta >= g * a.alpha; });
        if (!convex) {
            if (o.allow_cccp) return cccp_infer(m, g, o);
            throw UnsupportedError("gamma = " + gamma.str() +
                                   " exceeds beta/alpha on some arc; the problem is not convex (CCCP is available)");
        }
    }
    InferenceReport rep;
    rep.gamma = gamma;
    auto rct = make_tree(m, o);

    auto infinite = [&]() {
        rep.infinite = true;
        rep.inconsistency = kInf;
        rep.oinc_stage_one = kInf;
        rep.beliefs.model = m;
        rep.beliefs.rct = rct;
        return rep;
    };

    if (gamma.kind == GammaSpec::Kind::positive) {
        auto cp = compile_cluster_small_gamma(m, rct, gamma.gamma, o.compile);
        if (cp.infeasible) return infinite();
        auto sol = run(cp, o.tol, o, "small-gamma", rep.stages);
        if (sol.status == conic::Status::primal_infeasible) return infinite();
        require_usable(sol, "small-gamma");
        rep.beliefs = make_beliefs(m, rct, cp, sol, gamma.gamma);
        rep.inconsistency = sol.primal_objective;
        return rep;
    }

    // stage one; frozen conditionals want a tight optimum
    // zeros of stage one decide the stage-two support, so go to the floor
    double tol1 = gamma.kind == GammaSpec::Kind::zero_plus ? o.tol_floor : o.tol;
    auto cp = compile_cluster_inc(m, rct, o.compile);
    if (cp.infeasible) return infinite();
    auto sol = run(cp, tol1, o, "inc", rep.stages);
    if (sol.status == conic::Status::primal_infeasible) return infinite();
    require_usable(sol, "inc");
    rep.beliefs = make_beliefs(m, rct, cp, sol);
    rep.inconsistency = sol.primal_objective;
    rep.oinc_stage_one = sol.primal_objective;
    if (gamma.kind == GammaSpec::Kind::zero) return rep;

    auto frozen = freeze_marginals(m, rct, rep.beliefs.mu, o.compile.undefined_mass);
    auto cp2 = compile_cluster_zero_plus(m, rct, frozen, cp.support, o.compile);
    if (cp2.infeasible) throw SolverError("0+ stage two has an empty support");
    auto sol2 = run(cp2, o.tol, o, "zero-plus", rep.stages);
    require_usable(sol2, "zero-plus");
    rep.beliefs = make_beliefs(m, rct, cp2, sol2);
    rep.sinc_stage_two = sol2.primal_objective;
    return rep;
}

InferenceReport cccp_infer(const PDG& input, double gamma, const EngineOptions& o) {
    if (!(gamma > 0.0)) throw std::invalid_argument("CCCP needs gamma > 0");
    PDG m = prepare(input);
    auto rct = make_tree(m, o);
    InferenceReport rep;
    rep.gamma = GammaSpec::positive(gamma);
    bool convex = std::all_of(m.arcs.begin(), m.arcs.end(),
                              [gamma](const Hyperarc& a) { return a.beta >= gamma * a.alpha; });
    rep.local = !convex;

    auto D = cluster_domains(m, rct.td);
    Beliefs cur;
    for (const auto& d : D) cur.emplace_back(d.size(), 1.0 / static_cast<double>(d.size()));
    Linearization lin;
    lin.cond.resize(m.arcs.size());
    double prev = kInf;
    for (int it = 1; it <= std::max(1, o.cccp_max_iter); ++it) {
        for (std::size_t a = 0; a < m.arcs.size(); ++a) {
            const auto& arc = m.arcs[a];
            if (arc.beta >= gamma * arc.alpha) continue;
            auto t = arc_table(m, rct, cur, a);
            for (auto& row : t) {
                double ms = 0.0;
                for (double v : row) ms += v;
                for (double& v : row) v = ms > 0.0 ? v / ms : 1.0 / static_cast<double>(row.size());
            }
            lin.cond[a] = std::move(t);
        }
        auto cp = compile_cluster_small_gamma(m, rct, gamma, o.compile, convex ? nullptr : &lin);
        if (cp.infeasible) {
            rep.infinite = true;
            rep.inconsistency = kInf;
            rep.beliefs.model = m;
            rep.beliefs.rct = rct;
            rep.cccp_iterations = it;
            return rep;
        }
        auto sol = run(cp, o.tol, o, "cccp-" + std::to_string(it), rep.stages);
        require_usable(sol, "cccp");
        rep.beliefs = make_beliefs(m, rct, cp, sol);
        // the certificate needs a convex problem
        if (convex) rep.beliefs.certified = certified_precision(gamma, sol);
        cur = rep.beliefs.mu;
        double obj = score_from_beliefs(m, rct, cur, gamma);
        rep.cccp_objectives.push_back(obj);
        rep.cccp_iterations = it;
        rep.inconsistency = obj;
        if (convex || std::abs(prev - obj) <= o.cccp_tol) break;
        prev = obj;
    }
    return rep;
}

double inconsistency(const PDG& m, const GammaSpec& gamma, const EngineOptions& o) {
    auto r = infer(m, gamma, o);
    return gamma.kind == GammaSpec::Kind::zero_plus ? r.oinc_stage_one : r.inconsistency;
}

QueryResult query_marginal(const CalibratedBeliefs& cb, const Event& event) {
    const PDG& m = cb.model;
    if (cb.mu.empty()) throw DomainError("no beliefs: every distribution has infinite score");
    auto ev = resolve(m, event);
    const auto& rct = cb.rct;
    auto D = cluster_domains(m, rct.td);
    auto cards = m.cards();
    std::size_t nv = m.variables.size();
    std::size_t K = rct.size();

    // Pr(event) = sum over worlds of prod_C mu_C(c | vcp) [c agrees with event],
    // summed leaves-up; 0/0 = 0
    std::vector<std::vector<double>> msg(K);
    std::vector<double> root_total(1, 0.0);
    double result = 0.0;
    for (auto it = rct.order.rbegin(); it != rct.order.rend(); ++it) {
        int C = *it;
        Domain vd(rct.vcp[C], cards);
        auto g = projection_map(D[C], vd, nv);
        std::vector<double> pv(vd.size(), 0.0);
        for (std::size_t c = 0; c < D[C].size(); ++c) pv[g[c]] += cb.mu[C][c];
        std::vector<std::vector<std::size_t>> child_maps;
        for (int ch : rct.children[C]) child_maps.push_back(projection_map(D[C], Domain(rct.vcp[ch], cards), nv));
        msg[C].assign(vd.size(), 0.0);
        std::vector<int> full(nv, 0);
        for (std::size_t c = 0; c < D[C].size(); ++c) {
            if (!(cb.mu[C][c] > 0.0) || !(pv[g[c]] > 0.0)) continue;
            auto vals = D[C].decode(c);
            bool ok = true;
            for (auto [v, k] : ev) {
                int pos = D[C].position(v);
                if (pos >= 0 && vals[static_cast<std::size_t>(pos)] != k) ok = false;
            }
            if (!ok) continue;
            double phi = cb.mu[C][c] / pv[g[c]];
            for (std::size_t j = 0; j < child_maps.size(); ++j) phi *= msg[rct.children[C][j]][child_maps[j][c]];
            msg[C][g[c]] += phi;
        }
        if (C == rct.root) result = msg[C][0];
    }
    QueryResult q;
    q.estimate = std::clamp(result, 0.0, 1.0);
    q.precision = cb.precision;
    q.certified = cb.certified;
    q.lo = std::max(0.0, q.estimate - q.precision);
    q.hi = std::min(1.0, q.estimate + q.precision);
    return q;
}

QueryResult query_conditional(const PDG& m, const GammaSpec& gamma, const Event& target, const Event& given,
                              double eps, const EngineOptions& o) {
    if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("eps must lie in (0, 1)");
    for (const auto& [tv, tval] : target)
        for (const auto& [gv, gval] : given)
            if (tv == gv) throw DomainError("variable '" + tv + "' appears on both sides of the query");
    resolve(m, target);
    resolve(m, given);
    Event both = given;
    both.insert(both.end(), target.begin(), target.end());

    struct Solved {
        double tol;
        CalibratedBeliefs cb;
    };
    std::vector<Solved> cache;
    QueryResult res;
    std::size_t vc = 0;
    // a solve whose reported precision is at most delta, re-solving at the
    // tolerance delta / sqrt(|V C|) when no cached one qualifies
    auto beliefs_at = [&](double delta) -> const CalibratedBeliefs& {
        for (const auto& s : cache)
            if (s.cb.precision <= delta) return s.cb;
        double t = vc ? delta / (kResidualToError * std::sqrt(static_cast<double>(vc))) : o.tol;
        t = std::clamp(t, o.tol_floor, o.tol);
        for (const auto& s : cache)
            if (s.tol <= t) return s.cb;
        EngineOptions oo = o;
        oo.tol = t;
        auto rep = infer(m, gamma, oo);
        ++res.solves;
        if (rep.infinite) throw DomainError("every distribution has infinite score; queries are undefined");
        vc = 0;
        for (const auto& b : rep.beliefs.mu) vc += b.size();
        cache.push_back({t, std::move(rep.beliefs)});
        return cache.back().cb;
    };

    double delta = eps;
    double best_bound = 1.0;
    while (true) {
        if (!(delta >= kDeltaFloor))
            throw ImprobableEventError("conditioning on an event whose probability could not be separated from zero",
                                       best_bound);
        const auto& cb = beliefs_at(delta);
        double a = query_marginal(cb, given).estimate;
        best_bound = std::min(best_bound, a + std::max(delta, cb.precision));
        if (a > 2.0 * delta) {
            double dstar = eps * (a - delta) / 3.0;
            const auto& cb2 = beliefs_at(dstar);
            double p = query_marginal(cb2, given).estimate;
            double q = query_marginal(cb2, both).estimate;
            double dact = cb2.precision;
            res.estimate = std::clamp(q / (p + dstar), 0.0, 1.0);
            if (dact <= dstar) {
                res.precision = eps;
            } else {
                // the solver could not reach dstar: report the enclosure the
                // achieved precision supports
                double lo = std::max(0.0, q - dact) / (p + dact);
                double hi = std::min(1.0, (q + dact) / std::max(p - dact, 1e-300));
                res.precision = std::max(res.estimate - lo, hi - res.estimate);
            }
            res.lo = std::max(0.0, res.estimate - res.precision);
            res.hi = std::min(1.0, res.estimate + res.precision);
            if (std::isfinite(cb2.certified)) {
                double c = cb2.certified;
                double lo = std::max(0.0, q - c) / (p + c);
                double hi = p - c > 0.0 ? std::min(1.0, (q + c) / (p - c)) : 1.0;
                res.certified = std::max(res.estimate - lo, hi - res.estimate);
            }
            return res;
        }
        delta = delta * delta;
        ++res.escalations;
    }
}

PDG observation_widget(const PDG& m, const Event& event, double p) {
    auto ev = resolve(m, event);
    if (ev.empty()) throw DomainError("observation needs a nonempty event");
    PDG w = m;
    std::string name = "obs";
    while (w.index_of(name) >= 0) name += "_";
    w.variables.push_back({name, {"0", "1"}});
    Hyperarc ind;
    ind.id = name + "_indicator";
    ind.targets = {name};
    ind.alpha = 0.0;
    ind.beta = 1.0;
    std::vector<int> vars;
    for (auto [v, k] : ev) {
        ind.sources.push_back(m.variables[static_cast<std::size_t>(v)].name);
        vars.push_back(v);
    }
    Domain ds(vars, m.cards());
    for (std::size_t s = 0; s < ds.size(); ++s) {
        auto vals = ds.decode(s);
        bool hit = true;
        for (std::size_t i = 0; i < ev.size(); ++i)
            if (vals[i] != ev[i].second) hit = false;
        ind.cpd.push_back(hit ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0});
    }
    Hyperarc obs;
    obs.id = name + "_prob";
    obs.targets = {name};
    obs.alpha = 0.0;
    obs.beta = 1.0;
    obs.cpd = {{1.0 - p, p}};
    w.arcs.push_back(std::move(ind));
    w.arcs.push_back(std::move(obs));
    return w;
}

QueryResult infer_via_inconsistency(const PDG& m, double gamma, const Event& event, double eps,
                                    const EngineOptions& o) {
    if (!(gamma > 0.0)) throw std::invalid_argument("inference via inconsistency needs gamma > 0");
    if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("eps must lie in (0, 1)");
    for (const auto& a : m.arcs)
        if (a.alpha > 0.0 && !(gamma < a.beta / a.alpha))
            throw UnsupportedError("gamma must be below beta/alpha on every arc");
    EngineOptions oo = o;
    if (!oo.td) oo.td = build_decomposition(observation_widget(m, event, 0.5), o.method);
    QueryResult res;
    std::map<std::pair<double, double>, double> memo;  // (p, tolerance) -> f
    auto f = [&](double p, double precision) {
        double t = std::clamp(precision, o.tol_floor, o.tol);
        auto key = std::make_pair(p, t);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        EngineOptions ot = oo;
        ot.tol = t;
        double v = infer(observation_widget(m, event, p), GammaSpec::positive(gamma), ot).inconsistency;
        ++res.solves;
        memo[key] = v;
        return v;
    };
    // "f(z) << f(b)": decided at precision eps'; too close to call keeps the
    // left branch
    auto less = [&](double z, double b) {
        double d = std::log1p(8.0 * gamma * (z - b) * (z - b));
        double ep = d * d / (16.0 * gamma);
        double fz = f(z, ep), fb = f(b, ep);
        if (std::abs(fz - fb) > ep) return fz < fb;
        return z < b;
    };
    double a = 0.0, b = 0.5, c = 1.0;
    while (std::abs(c - a) > eps) {
        ++res.iterations;
        if (b - a >= c - b) {
            double z = 0.5 * (a + b);
            if (less(z, b)) {
                c = b;
                b = z;
            } else {
                a = z;
            }
        } else {
            double z = 0.5 * (b + c);
            if (less(z, b)) {
                a = b;
                b = z;
            } else {
                c = z;
            }
        }
    }
    res.estimate = b;
    res.lo = a;
    res.hi = c;
    res.precision = std::max(b - a, c - b);
    return res;
}

}  // namespace pdg
