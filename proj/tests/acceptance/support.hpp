#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdg/engine.hpp"
#include "pdg/oracle.hpp"

namespace acc {

// Outcome of one criterion. `detail` is a short summary of what was measured.
struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> failures;  // first few, for the log

    void fail(const std::string& why);
};

// Random PDG over binary variables with randomized weights (alpha in
// {0, 0.5, 1, 2}, beta in [0.5, 2]) and occasional zero cpd entries.
// Returns nothing when the min-fill width exceeds max_width.
std::optional<pdg::PDG> corpus_instance(std::uint64_t seed, int max_width = 3);

// The first `count` accepted instances, scanning seeds from 1.
std::vector<pdg::PDG> corpus(int count, int max_width = 3);

// min beta/alpha over arcs with alpha > 0 (1 when every alpha is 0)
double max_convex_gamma(const pdg::PDG& m);

double tv(const pdg::JointDistribution& a, const pdg::JointDistribution& b);

pdg::JointDistribution joint_of(const pdg::InferenceReport& r);

// I(A; B | S) in nats.
double cmi(const pdg::JointDistribution& mu, const std::vector<std::string>& a,
           const std::vector<std::string>& b, const std::vector<std::string>& s);

// Product of cpds over all worlds: the joint of a Bayesian-network-shaped
// PDG (one arc per variable, acyclic).
pdg::JointDistribution bn_joint(const pdg::PDG& m);

// Joint-form solve. For 0+ `objective` is the stage-one OInc.
struct JointSolve {
    bool ok = false;
    std::string status;
    double objective = 0.0;
    pdg::JointDistribution mu;
};
JointSolve joint_solve(const pdg::PDG& m, const pdg::GammaSpec& g, double tol);

// Uniformly random 3-CNF clauses over distinct variables, resampled until
// satisfiable.
pdg::Cnf random_3cnf(int n, int m, std::uint64_t seed);

std::string sci(double v);

}  // namespace acc
