#include "pdgcli/gen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pdgcli {

namespace {

using Rng = std::mt19937_64;

int draw(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

void ordered(const Range& r, const char* what) {
    if (r.lo > r.hi) throw std::invalid_argument(std::string(what) + ": lower bound exceeds upper bound");
}

pdg::Variable make_var(const std::string& name, int card) {
    pdg::Variable v{name, {}};
    for (int i = 0; i < card; ++i) v.values.push_back(std::to_string(i));
    return v;
}

std::vector<std::vector<double>> random_cpd(Rng& g, std::size_t ns, std::size_t nt, double floor) {
    std::uniform_real_distribution<double> u(floor, 1.0);
    std::vector<std::vector<double>> cpd(ns, std::vector<double>(nt));
    for (auto& row : cpd) {
        double s = 0.0;
        for (double& x : row) s += (x = u(g));
        for (double& x : row) x /= s;
    }
    return cpd;
}

std::size_t joint(const pdg::PDG& m, const std::vector<std::string>& vars) {
    std::size_t n = 1;
    for (const auto& v : vars) n *= m.card(m.index_of(v));
    return n;
}

// arc over vars drawn from pool; source / target counts within the ranges
pdg::Hyperarc random_arc(Rng& g, const pdg::PDG& m, std::vector<int> pool, const Range& sources,
                         const Range& targets, const std::string& id) {
    int sz = static_cast<int>(pool.size());
    int nt = draw(g, targets.lo, std::min(targets.hi, sz));
    int ns = draw(g, std::min(sources.lo, sz - nt), std::min(sources.hi, sz - nt));
    std::shuffle(pool.begin(), pool.end(), g);
    pdg::Hyperarc a;
    a.id = id;
    for (int i = 0; i < nt; ++i) a.targets.push_back(m.variables[static_cast<std::size_t>(pool[i])].name);
    for (int i = nt; i < nt + ns; ++i) a.sources.push_back(m.variables[static_cast<std::size_t>(pool[i])].name);
    a.cpd = random_cpd(g, joint(m, a.sources), joint(m, a.targets), 0.0);
    return a;
}

}  // namespace

void check(const RandomSpec& s) {
    ordered(s.n, "n");
    ordered(s.vals, "vals");
    ordered(s.arcs, "arcs");
    ordered(s.sources, "sources");
    ordered(s.targets, "targets");
    if (s.n.lo < 1) throw std::invalid_argument("n: need at least one variable");
    if (s.vals.lo < 1) throw std::invalid_argument("vals: need at least one value");
    if (s.arcs.lo < 0 || s.sources.lo < 0) throw std::invalid_argument("counts must be nonnegative");
    if (s.targets.lo < 1) throw std::invalid_argument("targets: every arc needs a target");
    if (s.targets.lo + s.sources.lo > s.n.lo)
        throw std::invalid_argument("sources + targets lower bounds exceed the smallest variable count");
}

pdg::PDG random_pdg(const RandomSpec& s, std::uint64_t seed) {
    check(s);
    Rng g(seed);
    pdg::PDG m;
    int n = draw(g, s.n.lo, s.n.hi);
    for (int i = 0; i < n; ++i) m.variables.push_back(make_var("X" + std::to_string(i), draw(g, s.vals.lo, s.vals.hi)));
    int na = draw(g, s.arcs.lo, s.arcs.hi);
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < na; ++i) m.arcs.push_back(random_arc(g, m, all, s.sources, s.targets, "a" + std::to_string(i)));
    return m;
}

void check(const KTreeSpec& s) {
    ordered(s.vals, "vals");
    ordered(s.sources, "sources");
    ordered(s.targets, "targets");
    if (s.k < 1) throw std::invalid_argument("treewidth must be at least 1");
    if (s.n < s.k + 1) throw std::invalid_argument("n must be at least treewidth + 1");
    if (s.arcs < 0 || s.sources.lo < 0 || s.vals.lo < 1) throw std::invalid_argument("counts must be positive");
    if (s.targets.lo < 1) throw std::invalid_argument("targets: every arc needs a target");
    if (s.targets.lo + s.sources.lo > s.k + 1)
        throw std::invalid_argument("sources + targets lower bounds exceed the clique size k + 1");
}

PdgFile random_ktree(const KTreeSpec& s, std::uint64_t seed) {
    check(s);
    Rng g(seed);
    PdgFile f;
    auto& m = f.model;
    for (int i = 0; i < s.n; ++i) m.variables.push_back(make_var("V" + std::to_string(i), draw(g, s.vals.lo, s.vals.hi)));
    pdg::TreeDecomposition td;
    std::vector<int> first(static_cast<std::size_t>(s.k + 1));
    std::iota(first.begin(), first.end(), 0);
    td.clusters.push_back(first);
    // each new vertex joins a k-clique taken from a random maximal clique
    for (int v = s.k + 1; v < s.n; ++v) {
        int host = draw(g, 0, static_cast<int>(td.clusters.size()) - 1);
        auto c = td.clusters[static_cast<std::size_t>(host)];
        c.erase(c.begin() + draw(g, 0, s.k));
        c.push_back(v);
        std::sort(c.begin(), c.end());
        td.clusters.push_back(std::move(c));
        td.edges.emplace_back(host, static_cast<int>(td.clusters.size()) - 1);
    }
    for (int i = 0; i < s.arcs; ++i) {
        int c = draw(g, 0, static_cast<int>(td.clusters.size()) - 1);
        m.arcs.push_back(random_arc(g, m, td.clusters[static_cast<std::size_t>(c)], s.sources, s.targets,
                                    "a" + std::to_string(i)));
    }
    f.td = std::move(td);
    return f;
}

pdg::PDG random_bn(int n, bool chain, std::uint64_t seed, Range vals) {
    if (n < 1) throw std::invalid_argument("n must be positive");
    ordered(vals, "vals");
    Rng g(seed);
    pdg::PDG m;
    for (int i = 0; i < n; ++i) m.variables.push_back(make_var("B" + std::to_string(i), draw(g, vals.lo, vals.hi)));
    for (int i = 0; i < n; ++i) {
        pdg::Hyperarc a;
        a.id = "p" + std::to_string(i);
        a.targets = {m.variables[static_cast<std::size_t>(i)].name};
        if (i > 0) {
            int par = chain ? i - 1 : draw(g, 0, i - 1);
            a.sources = {m.variables[static_cast<std::size_t>(par)].name};
        }
        a.cpd = random_cpd(g, joint(m, a.sources), joint(m, a.targets), 0.05);
        m.arcs.push_back(std::move(a));
    }
    return m;
}

}  // namespace pdgcli
