#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "pdg/decomp.hpp"
#include "pdg/model.hpp"

namespace pdg {

struct SizeError : std::length_error {
    using std::length_error::length_error;
};

struct OracleOptions {
    int restarts = 8;
    int iterations = 20000;
    double step = 0.5;  // mirror step is step / (1 + t)
    std::uint64_t seed = 1;
    // log-barrier Newton from the best mirror-descent point
    bool polish = true;
    std::size_t max_worlds = std::size_t{1} << 16;
    std::size_t max_newton_worlds = 1024;
};

struct OracleResult {
    JointDistribution mu;
    double score = 0.0;  // for 0+: the stage-one OInc
    double oinc = 0.0;
    double sinc = 0.0;
    bool finite = true;  // false when every distribution scores +inf
};

// Minimizes the gamma score over the full simplex of joint distributions.
OracleResult brute_force_optimum(const PDG& m, const GammaSpec& gamma, const OracleOptions& o = {});

// Stage two of 0+ on its own: among distributions whose arc conditionals
// match nu wherever nu(S=s) > 0, the one minimizing SInc.
JointDistribution zero_plus_stage_two(const PDG& m, const JointDistribution& nu,
                                      const OracleOptions& o = {});

// Product of cluster tables over product of separator tables, 0/0 = 0.
JointDistribution joint_from_beliefs(const PDG& m, const TreeDecomposition& td,
                                     const std::vector<std::vector<double>>& beliefs);

// Clique marginals of an explicit joint, in cluster-domain order.
std::vector<std::vector<double>> beliefs_of_joint(const PDG& m, const TreeDecomposition& td,
                                                  const JointDistribution& mu);

struct Cnf {
    int nvars = 0;
    std::vector<std::vector<int>> clauses;  // DIMACS literals, nonzero
};

Cnf parse_dimacs(std::istream& is);

// One binary variable per propositional variable (x1..xn) and per clause
// (c1..cm); per clause a deterministic OR arc and a unary arc asserting
// c_j = 1. All weights are 1.
PDG encode_cnf(const Cnf& f, int max_width = 3);

// encode_cnf plus one arc from nothing to every variable carrying the
// uniform joint.
PDG encode_cnf_uniform(const Cnf& f, int max_width = 3);

std::uint64_t count_models(const Cnf& f);

}  // namespace pdg
