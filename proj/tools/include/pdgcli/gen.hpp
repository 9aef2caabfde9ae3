#pragma once

#include <cstdint>

#include "pdgcli/format.hpp"

namespace pdgcli {

// Inclusive integer range.
struct Range {
    int lo, hi;
};

struct RandomSpec {
    Range n{5, 9};
    Range vals{2, 3};
    Range arcs{7, 14};
    Range sources{0, 3};
    Range targets{1, 2};
};

// Throws std::invalid_argument on contradictory bounds.
void check(const RandomSpec& s);
pdg::PDG random_pdg(const RandomSpec& s, std::uint64_t seed);

struct KTreeSpec {
    int n = 20;
    int k = 2;
    int arcs = 30;
    Range vals{2, 2};
    Range sources{0, 3};
    Range targets{1, 2};
};

void check(const KTreeSpec& s);
// Random k-tree on n vertices; arcs live inside its maximal cliques, which are
// returned as the embedded decomposition.
PdgFile random_ktree(const KTreeSpec& s, std::uint64_t seed);

// Bayesian network on a random tree (or a chain): one arc per variable from
// its parent, strictly positive cpds.
pdg::PDG random_bn(int n, bool chain, std::uint64_t seed, Range vals = {2, 2});

}  // namespace pdgcli
