#include "pdg/compile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdg {

namespace {

void fill_full(const Domain& d, std::size_t idx, std::vector<int>& full) {
    auto vals = d.decode(idx);
    for (std::size_t i = 0; i < vals.size(); ++i) full[d.vars()[i]] = vals[i];
}

std::vector<int> all_vars(const PDG& m) {
    std::vector<int> v(m.variables.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
}

void require_finite_beta(const PDG& m) {
    for (const auto& a : m.arcs)
        if (!std::isfinite(a.beta))
            throw UnsupportedError("arc '" + a.id + "' has infinite beta; the conic pipeline needs finite weights");
}

struct ArcMaps {
    std::size_t ns = 1, nt = 1;
    std::vector<std::size_t> s_of, t_of;  // per entry of the host domain
};

ArcMaps arc_maps(const PDG& m, std::size_t a, const Domain& host) {
    ArcMaps am;
    auto cards = m.cards();
    Domain ds(m.sources_of(a), cards), dt(m.targets_of(a), cards);
    am.ns = ds.size();
    am.nt = dt.size();
    std::vector<int> full(m.variables.size(), 0);
    am.s_of.resize(host.size());
    am.t_of.resize(host.size());
    for (std::size_t c = 0; c < host.size(); ++c) {
        fill_full(host, c, full);
        am.s_of[c] = ds.project(full);
        am.t_of[c] = dt.project(full);
    }
    return am;
}

class Builder {
public:
    int orthant(std::string label) {
        cones_.add_orthant(1);
        return push(std::move(label));
    }
    ArcSlot exp(const std::string& l1, const std::string& l2, const std::string& l3) {
        cones_.add_exp();
        ArcSlot s;
        s.x1 = push(l1);
        s.x2 = push(l2);
        s.x3 = push(l3);
        return s;
    }
    int row(double rhs) {
        b_.push_back(rhs);
        return m_++;
    }
    void at(int r, int c, double v) {
        if (v != 0.0) t_.emplace_back(r, c, v);
    }
    void cost(int c, double v) { c_[static_cast<std::size_t>(c)] += v; }
    std::vector<std::string>& labels() { return labels_; }

    conic::ConicProgram build() {
        conic::ConicProgram p;
        int n = static_cast<int>(labels_.size());
        p.c = conic::Vec::Zero(n);
        for (int j = 0; j < n; ++j) p.c(j) = c_[static_cast<std::size_t>(j)];
        p.b = conic::Vec::Zero(m_);
        for (int i = 0; i < m_; ++i) p.b(i) = b_[static_cast<std::size_t>(i)];
        p.A = conic::SpMat(m_, n);
        p.A.setFromTriplets(t_.begin(), t_.end());
        p.cones = cones_;
        return p;
    }

private:
    int push(std::string label) {
        labels_.push_back(std::move(label));
        c_.push_back(0.0);
        return static_cast<int>(labels_.size()) - 1;
    }

    conic::ConeSpec cones_;
    std::vector<std::string> labels_;
    std::vector<double> c_, b_;
    std::vector<conic::Triplet> t_;
    int m_ = 0;
};

std::string tag(const char* what, std::size_t i, std::size_t j) {
    return std::string(what) + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

std::string tag3(const char* what, std::size_t a, std::size_t s, std::size_t t) {
    return std::string(what) + "[" + std::to_string(a) + "," + std::to_string(s) + "," +
           std::to_string(t) + "]";
}

}  // namespace

std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::joint_inc: return "joint-inc";
        case ProblemKind::joint_small_gamma: return "joint-small-gamma";
        case ProblemKind::joint_zero_plus: return "joint-zero-plus";
        case ProblemKind::cluster_inc: return "cluster-inc";
        case ProblemKind::cluster_small_gamma: return "cluster-small-gamma";
        case ProblemKind::cluster_zero_plus: return "cluster-zero-plus";
    }
    return "?";
}

std::vector<Domain> cluster_domains(const PDG& m, const TreeDecomposition& td) {
    std::vector<Domain> out;
    auto cards = m.cards();
    for (const auto& c : td.clusters) out.emplace_back(c, cards);
    return out;
}

std::vector<std::size_t> projection_map(const Domain& from, const Domain& to, std::size_t nvars) {
    std::vector<std::size_t> out(from.size());
    std::vector<int> full(nvars, 0);
    for (std::size_t c = 0; c < from.size(); ++c) {
        fill_full(from, c, full);
        out[c] = to.project(full);
    }
    return out;
}

std::vector<double> marginalize(const Domain& from, const std::vector<double>& p, const Domain& to,
                                std::size_t nvars) {
    std::vector<double> out(to.size(), 0.0);
    auto map = projection_map(from, to, nvars);
    for (std::size_t c = 0; c < from.size(); ++c) out[map[c]] += p[c];
    return out;
}

ArcValueSplit split_arc_values(const PDG& m) {
    ArcValueSplit sp;
    for (std::size_t a = 0; a < m.arcs.size(); ++a)
        for (std::size_t s = 0; s < m.arcs[a].cpd.size(); ++s)
            for (std::size_t t = 0; t < m.arcs[a].cpd[s].size(); ++t) {
                ArcValue v{static_cast<int>(a), s, t};
                (m.arcs[a].cpd[s][t] > 0.0 ? sp.positive : sp.zero).push_back(v);
            }
    return sp;
}

Support all_live(const std::vector<Domain>& domains) {
    Support s;
    for (const auto& d : domains) s.live.emplace_back(d.size(), 1);
    return s;
}

void semi_join(const PDG& m, const RootedClusterTree& rct, Support& sup) {
    auto domains = cluster_domains(m, rct.td);
    std::size_t nv = m.variables.size();
    // semi-joins along tree edges until nothing changes; on a join tree this
    // leaves exactly the projections of globally consistent worlds
    auto cards = m.cards();
    struct EdgeMap {
        int c, p;
        std::size_t nsep;
        std::vector<std::size_t> from_c, from_p;
    };
    std::vector<EdgeMap> edges;
    for (std::size_t C = 0; C < rct.size(); ++C) {
        int P = rct.parent[C];
        if (P < 0) continue;
        Domain sep(rct.vcp[C], cards);
        edges.push_back({static_cast<int>(C), P, sep.size(), projection_map(domains[C], sep, nv),
                         projection_map(domains[P], sep, nv)});
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : edges) {
            std::vector<char> okc(e.nsep, 0), okp(e.nsep, 0);
            for (std::size_t c = 0; c < e.from_c.size(); ++c)
                if (sup.live[e.c][c]) okc[e.from_c[c]] = 1;
            for (std::size_t d = 0; d < e.from_p.size(); ++d)
                if (sup.live[e.p][d]) okp[e.from_p[d]] = 1;
            for (std::size_t c = 0; c < e.from_c.size(); ++c)
                if (sup.live[e.c][c] && !okp[e.from_c[c]]) {
                    sup.live[e.c][c] = 0;
                    changed = true;
                }
            for (std::size_t d = 0; d < e.from_p.size(); ++d)
                if (sup.live[e.p][d] && !okc[e.from_p[d]]) {
                    sup.live[e.p][d] = 0;
                    changed = true;
                }
        }
    }
}

Support cluster_support(const PDG& m, const RootedClusterTree& rct) {
    auto domains = cluster_domains(m, rct.td);
    Support sup = all_live(domains);
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        if (!(m.arcs[a].beta > 0.0)) continue;
        int C = rct.arc_cluster[a];
        auto am = arc_maps(m, a, domains[C]);
        for (std::size_t c = 0; c < domains[C].size(); ++c)
            if (m.arcs[a].cpd[am.s_of[c]][am.t_of[c]] <= 0.0) sup.live[C][c] = 0;
    }
    semi_join(m, rct, sup);
    for (const auto& l : sup.live)
        if (std::none_of(l.begin(), l.end(), [](char x) { return x != 0; })) sup.empty = true;
    return sup;
}

Support joint_support(const PDG& m) {
    Domain w(all_vars(m), m.cards());
    Support sup;
    sup.live.emplace_back(w.size(), 1);
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        if (!(m.arcs[a].beta > 0.0)) continue;
        auto am = arc_maps(m, a, w);
        for (std::size_t x = 0; x < w.size(); ++x)
            if (m.arcs[a].cpd[am.s_of[x]][am.t_of[x]] <= 0.0) sup.live[0][x] = 0;
    }
    sup.empty = std::none_of(sup.live[0].begin(), sup.live[0].end(), [](char x) { return x != 0; });
    return sup;
}

ProblemSize problem_size(const PDG& m, const RootedClusterTree* rct) {
    ProblemSize s;
    auto cards = m.cards();
    for (const auto& a : m.arcs) {
        for (const auto& row : a.cpd) {
            s.va += row.size();
            if (a.beta > 0.0)
                for (double p : row)
                    if (p <= 0.0) ++s.va0;
        }
    }
    if (rct) {
        s.clusters = rct->size();
        for (std::size_t C = 0; C < rct->size(); ++C) {
            s.vc += Domain(rct->td.clusters[C], cards).size();
            if (rct->parent[C] >= 0) s.vt += Domain(rct->vcp[C], cards).size();
        }
    } else {
        s.clusters = 1;
        s.vc = Domain(all_vars(m), cards).size();
    }
    return s;
}

std::pair<std::size_t, std::size_t> expected_dims(ProblemKind k, const ProblemSize& s) {
    switch (k) {
        case ProblemKind::joint_inc: return {3 * s.va + s.vc, 2 * s.va + 1};
        case ProblemKind::joint_small_gamma: return {3 * s.va + 3 * s.vc, 2 * s.va + s.va0 + s.vc + 1};
        case ProblemKind::joint_zero_plus: return {3 * s.vc, s.vc + s.va + 1};
        case ProblemKind::cluster_inc: return {3 * s.va + s.vc, 2 * s.va + s.vt + s.clusters};
        case ProblemKind::cluster_small_gamma:
            return {3 * s.va + 3 * s.vc, 2 * s.va + s.vt + s.va0 + s.vc + s.clusters};
        case ProblemKind::cluster_zero_plus: return {3 * s.vc, s.vc + s.vt + s.va + s.clusters};
    }
    return {0, 0};
}

namespace {

FrozenMarginals freeze_on(const PDG& m, const std::vector<Domain>& domains,
                          const std::vector<int>& host_of_arc, const Beliefs& nu, double undefined_mass) {
    FrozenMarginals f;
    std::size_t na = m.arcs.size();
    f.cond.resize(na);
    f.source_mass.resize(na);
    f.defined.resize(na);
    std::vector<ArcMaps> maps;
    for (std::size_t a = 0; a < na; ++a) {
        int C = host_of_arc[a];
        maps.push_back(arc_maps(m, a, domains[C]));
        const auto& am = maps.back();
        std::vector<double> joint(am.ns * am.nt, 0.0);
        for (std::size_t c = 0; c < domains[C].size(); ++c) joint[am.s_of[c] * am.nt + am.t_of[c]] += nu[C][c];
        f.cond[a].assign(am.ns, std::vector<double>(am.nt, 1.0 / static_cast<double>(am.nt)));
        f.source_mass[a].assign(am.ns, 0.0);
        f.defined[a].assign(am.ns, 0);
        for (std::size_t s = 0; s < am.ns; ++s) {
            double ms = 0.0;
            for (std::size_t t = 0; t < am.nt; ++t) ms += joint[s * am.nt + t];
            f.source_mass[a][s] = ms;
            if (ms > undefined_mass) {
                f.defined[a][s] = 1;
                for (std::size_t t = 0; t < am.nt; ++t) f.cond[a][s][t] = joint[s * am.nt + t] / ms;
            }
        }
    }
    f.k.resize(domains.size());
    f.stage_one_live.resize(domains.size());
    for (std::size_t C = 0; C < domains.size(); ++C) {
        f.k[C].assign(domains[C].size(), 1.0);
        f.stage_one_live[C].resize(domains[C].size());
        for (std::size_t c = 0; c < domains[C].size(); ++c) f.stage_one_live[C][c] = nu[C][c] > undefined_mass;
    }
    for (std::size_t a = 0; a < na; ++a) {
        double alpha = m.arcs[a].alpha;
        if (alpha == 0.0) continue;
        int C = host_of_arc[a];
        const auto& am = maps[a];
        for (std::size_t c = 0; c < domains[C].size(); ++c)
            f.k[C][c] *= std::pow(f.cond[a][am.s_of[c]][am.t_of[c]], alpha);
    }
    return f;
}

}  // namespace

FrozenMarginals freeze_marginals(const PDG& m, const RootedClusterTree& rct, const Beliefs& nu,
                                 double undefined_mass) {
    return freeze_on(m, cluster_domains(m, rct.td), rct.arc_cluster, nu, undefined_mass);
}

FrozenMarginals freeze_marginals(const PDG& m, const JointDistribution& nu, double undefined_mass) {
    std::vector<Domain> d{Domain(all_vars(m), m.cards())};
    std::vector<int> host(m.arcs.size(), 0);
    return freeze_on(m, d, host, Beliefs{nu.probs()}, undefined_mass);
}

// ---------------------------------------------------------------------------
// Joint-distribution programs, written directly over worlds.

namespace {

CompiledProblem joint_program(const PDG& m, ProblemKind kind, double gamma, const CompileOptions& o,
                              const FrozenMarginals* f) {
    require_finite_beta(m);
    CompiledProblem cp;
    cp.kind = kind;
    cp.gamma = gamma;
    cp.size = problem_size(m, nullptr);
    Domain w(all_vars(m), m.cards());
    cp.domains = {w};
    std::size_t W = w.size();
    if (o.reduce) {
        if (kind == ProblemKind::joint_zero_plus) {
            cp.support = all_live(cp.domains);
            for (std::size_t x = 0; x < W; ++x)
                if (!(f->k[0][x] > 0.0) || !f->stage_one_live[0][x]) cp.support.live[0][x] = 0;
            // worlds excluded in stage one stay excluded
            auto s1 = joint_support(m);
            for (std::size_t x = 0; x < W; ++x)
                if (!s1.live[0][x]) cp.support.live[0][x] = 0;
            cp.support.empty = std::none_of(cp.support.live[0].begin(), cp.support.live[0].end(),
                                            [](char c) { return c != 0; });
        } else {
            cp.support = joint_support(m);
        }
    } else {
        cp.support = all_live(cp.domains);
    }
    if (cp.support.empty) {
        cp.infeasible = true;
        return cp;
    }
    const auto& live = cp.support.live[0];
    Builder bd;
    IndexMap& ix = cp.index;
    ix.mu.assign(1, std::vector<int>(W, -1));
    ix.v.assign(1, std::vector<int>(W, -1));
    ix.vcp.assign(1, std::vector<int>(W, -1));

    bool inc = kind == ProblemKind::joint_inc;
    bool zp = kind == ProblemKind::joint_zero_plus;
    for (std::size_t x = 0; x < W; ++x) {
        if (!live[x]) continue;
        if (inc) {
            ix.mu[0][x] = bd.orthant(tag("mu", 0, x));
        } else {
            auto s = bd.exp(tag("vcp", 0, x), tag("mu", 0, x), tag(zp ? "u" : "v", 0, x));
            ix.vcp[0][x] = s.x1;
            ix.mu[0][x] = s.x2;
            ix.v[0][x] = s.x3;
            // x1 = 1. For the 0+ stage u >= mu log(mu / k) is written as the
            // entropy cone plus -log k on mu: k can be ~1e-10, and inside
            // the cone it would put 1/k into the dual
            int r = bd.row(1.0);
            bd.at(r, s.x1, 1.0);
            bd.cost(s.x3, zp ? -1.0 : -gamma);
            if (zp) bd.cost(s.x2, -std::log(f->k[0][x]));
        }
    }

    ix.u.resize(m.arcs.size());
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        auto am = arc_maps(m, a, w);
        ix.u[a].assign(am.ns * am.nt, ArcSlot{});
        std::vector<std::vector<int>> st(am.ns * am.nt), sv(am.ns);
        for (std::size_t x = 0; x < W; ++x) {
            if (!live[x]) continue;
            st[am.s_of[x] * am.nt + am.t_of[x]].push_back(ix.mu[0][x]);
            sv[am.s_of[x]].push_back(ix.mu[0][x]);
        }
        if (zp) {
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    const auto& lst = st[s * am.nt + t];
                    if (o.reduce && (!f->defined[a][s] || (lst.empty() && sv[s].empty()))) continue;
                    double ns = f->source_mass[a][s];
                    double nst = f->cond[a][s][t] * ns;
                    int r = bd.row(0.0);
                    for (int c : lst) bd.at(r, c, ns);
                    for (int c : sv[s]) bd.at(r, c, -nst);
                }
            continue;
        }
        double coef = inc ? arc.beta : arc.beta - gamma * arc.alpha;
        if (coef < 0.0)
            throw UnsupportedError("arc '" + arc.id + "' has beta < gamma alpha; use CCCP");
        bool weight_p = inc || o.variant_4a;
        if (!(o.reduce && coef == 0.0)) {
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    const auto& lst = st[s * am.nt + t];
                    if (o.reduce && lst.empty()) continue;
                    auto slot = bd.exp(tag3("ux1", a, s, t), tag3("ux2", a, s, t), tag3("u", a, s, t));
                    ix.u[a][s * am.nt + t] = slot;
                    int r1 = bd.row(0.0);
                    bd.at(r1, slot.x1, 1.0);
                    double wgt = weight_p ? arc.cpd[s][t] : 1.0;
                    for (int c : sv[s]) bd.at(r1, c, -wgt);
                    int r2 = bd.row(0.0);
                    bd.at(r2, slot.x2, 1.0);
                    for (int c : lst) bd.at(r2, c, -1.0);
                    bd.cost(slot.x3, -coef);
                }
        }
        if (!inc) {
            double lin = o.variant_4a ? gamma * arc.alpha : arc.beta;
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    double p = arc.cpd[s][t];
                    const auto& lst = st[s * am.nt + t];
                    if (p > 0.0) {
                        if (lin != 0.0)
                            for (int c : lst) bd.cost(c, -lin * std::log(p));
                    } else if (arc.beta > 0.0 && !o.reduce) {
                        int r = bd.row(0.0);
                        for (int c : lst) bd.at(r, c, 1.0);
                    }
                }
        }
    }
    int r = bd.row(1.0);
    for (std::size_t x = 0; x < W; ++x)
        if (live[x]) bd.at(r, ix.mu[0][x], 1.0);
    cp.program = bd.build();
    ix.labels = std::move(bd.labels());
    return cp;
}

}  // namespace

CompiledProblem compile_joint_inc(const PDG& m, const CompileOptions& o) {
    return joint_program(m, ProblemKind::joint_inc, 0.0, o, nullptr);
}

CompiledProblem compile_joint_small_gamma(const PDG& m, double gamma, const CompileOptions& o) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    return joint_program(m, ProblemKind::joint_small_gamma, gamma, o, nullptr);
}

CompiledProblem compile_joint_zero_plus(const PDG& m, const FrozenMarginals& f, const CompileOptions& o) {
    return joint_program(m, ProblemKind::joint_zero_plus, 0.0, o, &f);
}

// ---------------------------------------------------------------------------
// Cluster-tree programs.

namespace {

CompiledProblem cluster_program(const PDG& m, const RootedClusterTree& rct, ProblemKind kind,
                                double gamma, const CompileOptions& o, const Linearization* lin,
                                const FrozenMarginals* f, const Support* stage_one) {
    require_finite_beta(m);
    CompiledProblem cp;
    cp.kind = kind;
    cp.gamma = gamma;
    cp.size = problem_size(m, &rct);
    cp.domains = cluster_domains(m, rct.td);
    const auto& D = cp.domains;
    std::size_t K = D.size(), nv = m.variables.size();
    auto cards = m.cards();
    bool inc = kind == ProblemKind::cluster_inc;
    bool zp = kind == ProblemKind::cluster_zero_plus;

    if (o.reduce) {
        cp.support = stage_one ? *stage_one : cluster_support(m, rct);
    } else {
        cp.support = all_live(D);
    }
    if (cp.support.empty) {
        cp.infeasible = true;
        return cp;
    }
    const auto& live = cp.support.live;

    Builder bd;
    IndexMap& ix = cp.index;
    ix.mu.resize(K);
    ix.v.resize(K);
    ix.vcp.resize(K);
    for (std::size_t C = 0; C < K; ++C) {
        ix.mu[C].assign(D[C].size(), -1);
        ix.v[C].assign(D[C].size(), -1);
        ix.vcp[C].assign(D[C].size(), -1);
    }

    // cluster entries
    for (std::size_t C = 0; C < K; ++C)
        for (std::size_t c = 0; c < D[C].size(); ++c) {
            if (!live[C][c]) continue;
            if (inc) {
                ix.mu[C][c] = bd.orthant(tag("mu", C, c));
            } else {
                auto s = bd.exp(tag("vcp", C, c), tag("mu", C, c), tag(zp ? "u" : "v", C, c));
                ix.vcp[C][c] = s.x1;
                ix.mu[C][c] = s.x2;
                ix.v[C][c] = s.x3;
            }
        }

    // entropy cones: x1 = mu_C(VCP_C(c)), with mu_C(empty) = 1; the 0+
    // factor k enters as -log k on mu (same reason as the joint form)
    if (!inc) {
        for (std::size_t C = 0; C < K; ++C) {
            Domain vd(rct.vcp[C], cards);
            auto g = projection_map(D[C], vd, nv);
            std::vector<std::vector<int>> group(vd.size());
            for (std::size_t c = 0; c < D[C].size(); ++c)
                if (live[C][c]) group[g[c]].push_back(ix.mu[C][c]);
            for (std::size_t c = 0; c < D[C].size(); ++c) {
                if (!live[C][c]) continue;
                int x1 = ix.vcp[C][c];
                if (rct.vcp[C].empty()) {
                    int r = bd.row(1.0);
                    bd.at(r, x1, 1.0);
                } else {
                    int r = bd.row(0.0);
                    bd.at(r, x1, 1.0);
                    for (int col : group[g[c]]) bd.at(r, col, -1.0);
                }
                bd.cost(ix.v[C][c], zp ? -1.0 : -gamma);
                if (zp) bd.cost(ix.mu[C][c], -std::log(f->k[C][c]));
            }
        }
    }

    // arcs
    ix.u.resize(m.arcs.size());
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        const auto& arc = m.arcs[a];
        int C = rct.arc_cluster[a];
        auto am = arc_maps(m, a, D[C]);
        ix.u[a].assign(am.ns * am.nt, ArcSlot{});
        std::vector<std::vector<int>> st(am.ns * am.nt), sv(am.ns);
        for (std::size_t c = 0; c < D[C].size(); ++c) {
            if (!live[C][c]) continue;
            st[am.s_of[c] * am.nt + am.t_of[c]].push_back(ix.mu[C][c]);
            sv[am.s_of[c]].push_back(ix.mu[C][c]);
        }
        if (zp) {
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    const auto& lst = st[s * am.nt + t];
                    if (o.reduce && (!f->defined[a][s] || (lst.empty() && sv[s].empty()))) continue;
                    double ns = f->source_mass[a][s];
                    double nst = f->cond[a][s][t] * ns;
                    int r = bd.row(0.0);
                    for (int c : lst) bd.at(r, c, ns);
                    for (int c : sv[s]) bd.at(r, c, -nst);
                }
            continue;
        }
        bool linearized = lin && a < lin->cond.size() && !lin->cond[a].empty();
        double coef = inc ? arc.beta : arc.beta - gamma * arc.alpha;
        if (coef < 0.0 && !linearized)
            throw UnsupportedError("arc '" + arc.id + "' has beta < gamma alpha; use CCCP");
        if (linearized && o.variant_4a)
            throw std::invalid_argument("linearized arcs need the default objective form");
        bool weight_p = inc || o.variant_4a;
        if (!linearized && !(o.reduce && coef == 0.0)) {
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    const auto& lst = st[s * am.nt + t];
                    if (o.reduce && lst.empty()) continue;
                    auto slot = bd.exp(tag3("ux1", a, s, t), tag3("ux2", a, s, t), tag3("u", a, s, t));
                    ix.u[a][s * am.nt + t] = slot;
                    int r1 = bd.row(0.0);
                    bd.at(r1, slot.x1, 1.0);
                    double wgt = weight_p ? arc.cpd[s][t] : 1.0;
                    for (int c : sv[s]) bd.at(r1, c, -wgt);
                    int r2 = bd.row(0.0);
                    bd.at(r2, slot.x2, 1.0);
                    for (int c : lst) bd.at(r2, c, -1.0);
                    bd.cost(slot.x3, -coef);
                }
        }
        if (!inc) {
            double lw = o.variant_4a ? gamma * arc.alpha : arc.beta;
            for (std::size_t s = 0; s < am.ns; ++s)
                for (std::size_t t = 0; t < am.nt; ++t) {
                    double p = arc.cpd[s][t];
                    const auto& lst = st[s * am.nt + t];
                    if (p > 0.0) {
                        if (lw != 0.0)
                            for (int c : lst) bd.cost(c, -lw * std::log(p));
                    } else if (arc.beta > 0.0 && !o.reduce) {
                        int r = bd.row(0.0);
                        for (int c : lst) bd.at(r, c, 1.0);
                    }
                    if (linearized) {
                        // (gamma alpha - beta) H(T|S) is bounded above by its
                        // tangent, which is linear with no constant term
                        double q = std::max(lin->cond[a][s][t], 1e-12);
                        for (int c : lst) bd.cost(c, -(gamma * arc.alpha - arc.beta) * std::log(q));
                    }
                }
        }
    }

    // simplex per cluster
    for (std::size_t C = 0; C < K; ++C) {
        int r = bd.row(1.0);
        for (std::size_t c = 0; c < D[C].size(); ++c)
            if (live[C][c]) bd.at(r, ix.mu[C][c], 1.0);
    }

    // calibration on every tree edge
    for (std::size_t C = 0; C < K; ++C) {
        int P = rct.parent[C];
        if (P < 0) continue;
        Domain sep(rct.vcp[C], cards);
        auto gc = projection_map(D[C], sep, nv);
        auto gp = projection_map(D[P], sep, nv);
        std::vector<std::vector<std::pair<int, double>>> rows(sep.size());
        for (std::size_t c = 0; c < D[C].size(); ++c)
            if (live[C][c]) rows[gc[c]].emplace_back(ix.mu[C][c], 1.0);
        for (std::size_t d = 0; d < D[P].size(); ++d)
            if (live[P][d]) rows[gp[d]].emplace_back(ix.mu[P][d], -1.0);
        for (const auto& entries : rows) {
            if (o.reduce && entries.empty()) continue;
            int r = bd.row(0.0);
            for (auto [col, v] : entries) bd.at(r, col, v);
        }
    }

    cp.program = bd.build();
    ix.labels = std::move(bd.labels());
    return cp;
}

}  // namespace

CompiledProblem compile_cluster_inc(const PDG& m, const RootedClusterTree& rct, const CompileOptions& o) {
    return cluster_program(m, rct, ProblemKind::cluster_inc, 0.0, o, nullptr, nullptr, nullptr);
}

CompiledProblem compile_cluster_small_gamma(const PDG& m, const RootedClusterTree& rct, double gamma,
                                            const CompileOptions& o, const Linearization* lin) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    return cluster_program(m, rct, ProblemKind::cluster_small_gamma, gamma, o, lin, nullptr, nullptr);
}

CompiledProblem compile_cluster_zero_plus(const PDG& m, const RootedClusterTree& rct,
                                          const FrozenMarginals& f, const Support& stage_one,
                                          const CompileOptions& o) {
    Support s = stage_one;
    if (o.reduce) {
        // entries with k = 0 carry no mass at the optimum
        for (std::size_t C = 0; C < s.live.size(); ++C)
            for (std::size_t c = 0; c < s.live[C].size(); ++c)
                if (!(f.k[C][c] > 0.0) || !f.stage_one_live[C][c]) s.live[C][c] = 0;
        semi_join(m, rct, s);
        for (const auto& l : s.live)
            if (std::none_of(l.begin(), l.end(), [](char x) { return x != 0; })) s.empty = true;
    }
    return cluster_program(m, rct, ProblemKind::cluster_zero_plus, 0.0, o, nullptr, &f,
                           o.reduce ? &s : nullptr);
}

Beliefs beliefs_from(const CompiledProblem& cp, const conic::Vec& x) {
    Beliefs out;
    for (std::size_t C = 0; C < cp.domains.size(); ++C) {
        std::vector<double> p(cp.domains[C].size(), 0.0);
        double tot = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) {
            int col = cp.index.mu[C][c];
            if (col >= 0) p[c] = std::max(0.0, x(col));
            tot += p[c];
        }
        if (tot > 0.0)
            for (double& v : p) v /= tot;
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

}  // namespace

double entropy_bethe(const PDG& m, const TreeDecomposition& td, const Beliefs& mu) {
    auto D = cluster_domains(m, td);
    auto cards = m.cards();
    double h = 0.0;
    for (std::size_t C = 0; C < D.size(); ++C) h += entropy_of(mu[C]);
    for (auto [i, j] : td.edges) {
        std::vector<int> sep;
        std::set_intersection(td.clusters[i].begin(), td.clusters[i].end(), td.clusters[j].begin(),
                              td.clusters[j].end(), std::back_inserter(sep));
        h -= entropy_of(marginalize(D[i], mu[i], Domain(sep, cards), m.variables.size()));
    }
    return h;
}

double entropy_vcp(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu) {
    auto D = cluster_domains(m, rct.td);
    auto cards = m.cards();
    double h = 0.0;
    for (std::size_t C = 0; C < D.size(); ++C) {
        Domain vd(rct.vcp[C], cards);
        auto g = projection_map(D[C], vd, m.variables.size());
        std::vector<double> pv(vd.size(), 0.0);
        for (std::size_t c = 0; c < D[C].size(); ++c) pv[g[c]] += mu[C][c];
        for (std::size_t c = 0; c < D[C].size(); ++c)
            if (mu[C][c] > 0.0) h -= mu[C][c] * std::log(mu[C][c] / pv[g[c]]);
    }
    return h;
}

}  // namespace pdg
