#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pdg/model.hpp"

namespace pdg {

struct DecompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Clusters hold sorted variable indices of the owning PDG.
struct TreeDecomposition {
    std::vector<std::vector<int>> clusters;
    std::vector<std::pair<int, int>> edges;

    int width() const;
};

struct RootedClusterTree {
    TreeDecomposition td;
    int root = 0;
    std::vector<int> parent;                 // -1 at the root
    std::vector<std::vector<int>> children;
    std::vector<int> arc_cluster;            // C_a per arc
    std::vector<std::vector<int>> vcp;       // C ∩ Par(C), sorted; empty at root
    std::vector<int> order;                  // root first, parents before children

    std::size_t size() const { return td.clusters.size(); }
};

enum class DecompMethod { min_fill, min_degree, given };

TreeDecomposition build_decomposition(const PDG& m, DecompMethod method,
                                      const std::vector<std::vector<int>>& given = {});

// Checks coverage, tree shape and running intersection; returns an empty
// string when valid, otherwise a description of the first failure.
std::string check_decomposition(const PDG& m, const TreeDecomposition& td);

// Sum over non-root clusters of |V(VCP_C)| for the given root.
double root_cost(const TreeDecomposition& td, const PDG& m, int root);

RootedClusterTree root_and_assign(const TreeDecomposition& td, const PDG& m);
RootedClusterTree root_at(const TreeDecomposition& td, const PDG& m, int root);

// Variables in the moral graph: all variables co-occurring in some arc scope.
std::vector<std::vector<int>> moral_graph(const PDG& m);

}  // namespace pdg
