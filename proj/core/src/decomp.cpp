#include "pdg/decomp.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <string>

namespace pdg {

int TreeDecomposition::width() const {
    int w = 0;
    for (const auto& c : clusters) w = std::max(w, static_cast<int>(c.size()));
    return w - 1;
}

std::vector<std::vector<int>> moral_graph(const PDG& m) {
    std::vector<std::set<int>> adj(m.variables.size());
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        auto scope = m.scope_of(a);
        for (int u : scope)
            for (int v : scope)
                if (u != v) adj[u].insert(v);
    }
    std::vector<std::vector<int>> out;
    for (auto& s : adj) out.emplace_back(s.begin(), s.end());
    return out;
}

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Maximum-weight spanning tree on separator sizes; ties by lowest index pair.
std::vector<std::pair<int, int>> spanning_tree(const std::vector<std::vector<int>>& clusters) {
    int k = static_cast<int>(clusters.size());
    struct E { int w, i, j; };
    std::vector<E> es;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            es.push_back({static_cast<int>(intersect(clusters[i], clusters[j]).size()), i, j});
    std::stable_sort(es.begin(), es.end(), [](const E& a, const E& b) { return a.w > b.w; });
    std::vector<int> uf(k);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : es) {
        int a = find(e.i), b = find(e.j);
        if (a == b) continue;
        uf[a] = b;
        edges.emplace_back(e.i, e.j);
    }
    return edges;
}

std::vector<std::vector<int>> eliminate(const PDG& m, bool min_fill) {
    int n = static_cast<int>(m.variables.size());
    auto base = moral_graph(m);
    std::vector<std::set<int>> adj(n);
    for (int v = 0; v < n; ++v) adj[v].insert(base[v].begin(), base[v].end());
    std::vector<bool> done(n, false);
    std::vector<std::vector<int>> cliques;
    for (int step = 0; step < n; ++step) {
        int best = -1;
        long best_score = 0;
        for (int v = 0; v < n; ++v) {
            if (done[v]) continue;
            long score;
            if (min_fill) {
                score = 0;
                std::vector<int> nb(adj[v].begin(), adj[v].end());
                for (std::size_t i = 0; i < nb.size(); ++i)
                    for (std::size_t j = i + 1; j < nb.size(); ++j)
                        if (!adj[nb[i]].count(nb[j])) ++score;
            } else {
                score = static_cast<long>(adj[v].size());
            }
            if (best < 0 || score < best_score) {
                best = v;
                best_score = score;
            }
        }
        std::vector<int> clique(adj[best].begin(), adj[best].end());
        clique.push_back(best);
        std::sort(clique.begin(), clique.end());
        for (int u : adj[best])
            for (int w : adj[best])
                if (u != w) adj[u].insert(w);
        for (int u : adj[best]) adj[u].erase(best);
        adj[best].clear();
        done[best] = true;
        cliques.push_back(std::move(clique));
    }
    // keep maximal cliques, first occurrence wins
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < cliques.size() && !dominated; ++j) {
            if (i == j) continue;
            if (subset(cliques[i], cliques[j]) &&
                (cliques[i].size() < cliques[j].size() || j < i))
                dominated = true;
        }
        if (!dominated) out.push_back(cliques[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string check_decomposition(const PDG& m, const TreeDecomposition& td) {
    int k = static_cast<int>(td.clusters.size());
    int n = static_cast<int>(m.variables.size());
    if (k == 0) return n == 0 ? "" : "no clusters";
    for (const auto& c : td.clusters) {
        if (!std::is_sorted(c.begin(), c.end()) ||
            std::adjacent_find(c.begin(), c.end()) != c.end())
            return "cluster not a sorted set";
        for (int v : c)
            if (v < 0 || v >= n) return "cluster references unknown variable";
    }
    std::vector<bool> covered(n, false);
    for (const auto& c : td.clusters)
        for (int v : c) covered[v] = true;
    for (int v = 0; v < n; ++v)
        if (!covered[v]) return "variable '" + m.variables[v].name + "' not covered";
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        auto scope = m.scope_of(a);
        std::sort(scope.begin(), scope.end());
        bool ok = std::any_of(td.clusters.begin(), td.clusters.end(),
                              [&](const std::vector<int>& c) { return subset(scope, c); });
        if (!ok) return "arc '" + m.arcs[a].id + "' not contained in any cluster";
    }
    if (static_cast<int>(td.edges.size()) != k - 1) return "edges do not form a tree";
    std::vector<std::vector<int>> adj(k);
    for (auto [i, j] : td.edges) {
        if (i < 0 || j < 0 || i >= k || j >= k || i == j) return "bad edge";
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    // path walks from every cluster
    for (int s = 0; s < k; ++s) {
        std::vector<int> prev(k, -2);
        prev[s] = -1;
        std::queue<int> q;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[u])
                if (prev[v] == -2) {
                    prev[v] = u;
                    q.push(v);
                }
        }
        for (int t = 0; t < k; ++t) {
            if (prev[t] == -2) return "edges do not form a tree";
            auto sep = intersect(td.clusters[s], td.clusters[t]);
            for (int u = t; u != -1; u = prev[u])
                if (!subset(sep, td.clusters[u])) return "running intersection violated";
        }
    }
    return "";
}

TreeDecomposition build_decomposition(const PDG& m, DecompMethod method,
                                      const std::vector<std::vector<int>>& given) {
    TreeDecomposition td;
    if (method == DecompMethod::given) {
        for (auto c : given) {
            std::sort(c.begin(), c.end());
            c.erase(std::unique(c.begin(), c.end()), c.end());
            td.clusters.push_back(std::move(c));
        }
    } else {
        td.clusters = eliminate(m, method == DecompMethod::min_fill);
    }
    td.edges = spanning_tree(td.clusters);
    auto err = check_decomposition(m, td);
    if (!err.empty()) throw DecompositionError(err);
    return td;
}

namespace {

std::vector<int> parents_from(const TreeDecomposition& td, int root, std::vector<int>* order) {
    int k = static_cast<int>(td.clusters.size());
    std::vector<std::vector<int>> adj(k);
    for (auto [i, j] : td.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    std::vector<int> parent(k, -2);
    parent[root] = -1;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (order) order->push_back(u);
        for (int v : adj[u])
            if (parent[v] == -2) {
                parent[v] = u;
                q.push(v);
            }
    }
    return parent;
}

}  // namespace

double root_cost(const TreeDecomposition& td, const PDG& m, int root) {
    auto parent = parents_from(td, root, nullptr);
    double cost = 0.0;
    for (std::size_t c = 0; c < td.clusters.size(); ++c) {
        if (parent[c] < 0) continue;
        double sz = 1.0;
        for (int v : intersect(td.clusters[c], td.clusters[parent[c]]))
            sz *= static_cast<double>(m.card(v));
        cost += sz;
    }
    return cost;
}

RootedClusterTree root_at(const TreeDecomposition& td, const PDG& m, int root) {
    RootedClusterTree r;
    r.td = td;
    r.root = root;
    r.parent = parents_from(td, root, &r.order);
    int k = static_cast<int>(td.clusters.size());
    r.children.assign(k, {});
    r.vcp.assign(k, {});
    for (int c = 0; c < k; ++c)
        if (r.parent[c] >= 0) {
            r.children[r.parent[c]].push_back(c);
            r.vcp[c] = intersect(td.clusters[c], td.clusters[r.parent[c]]);
        }
    for (std::size_t a = 0; a < m.arcs.size(); ++a) {
        auto scope = m.scope_of(a);
        std::sort(scope.begin(), scope.end());
        int best = -1;
        for (int c = 0; c < k; ++c)
            if (subset(scope, td.clusters[c]) &&
                (best < 0 || td.clusters[c].size() < td.clusters[best].size()))
                best = c;
        if (best < 0) throw DecompositionError("arc '" + m.arcs[a].id + "' not covered");
        r.arc_cluster.push_back(best);
    }
    return r;
}

RootedClusterTree root_and_assign(const TreeDecomposition& td, const PDG& m) {
    int best = 0;
    double best_cost = 0.0;
    for (int c = 0; c < static_cast<int>(td.clusters.size()); ++c) {
        double cost = root_cost(td, m, c);
        if (c == 0 || cost < best_cost) {
            best = c;
            best_cost = cost;
        }
    }
    return root_at(td, m, best);
}

}  // namespace pdg
