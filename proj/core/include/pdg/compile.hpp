#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdg/conic.hpp"
#include "pdg/decomp.hpp"
#include "pdg/model.hpp"

namespace pdg {

// Raised for inputs outside what the convex pipeline handles (infinite beta,
// beta < gamma alpha without CCCP, non-proper PDGs under 0+).
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One probability table per cluster, indexed by Domain(cluster vars).
using Beliefs = std::vector<std::vector<double>>;

std::vector<Domain> cluster_domains(const PDG& m, const TreeDecomposition& td);

// For each entry of `from`, the index of its restriction in `to`.
// to.vars() must be a subset of from.vars().
std::vector<std::size_t> projection_map(const Domain& from, const Domain& to, std::size_t nvars);

std::vector<double> marginalize(const Domain& from, const std::vector<double>& p, const Domain& to,
                                std::size_t nvars);

struct ArcValue {
    int arc;
    std::size_t s, t;  // joint source / target indices
};

struct ArcValueSplit {
    std::vector<ArcValue> positive;  // p(t|s) > 0
    std::vector<ArcValue> zero;      // p(t|s) = 0
};

ArcValueSplit split_arc_values(const PDG& m);

// Entries whose probability is forced to zero by some arc with beta > 0 and
// p(t|s) = 0, propagated through the tree by semi-joins. live[C][c] != 0 for
// entries that can carry mass.
struct Support {
    std::vector<std::vector<char>> live;
    bool empty = false;
};

Support all_live(const std::vector<Domain>& domains);
Support cluster_support(const PDG& m, const RootedClusterTree& rct);
Support joint_support(const PDG& m);
// Removes entries with no consistent partner across a tree edge, to a fixpoint.
void semi_join(const PDG& m, const RootedClusterTree& rct, Support& sup);

struct ArcSlot {
    int x1 = -1, x2 = -1, x3 = -1;  // x3 holds -u
};

// Column of every conic coordinate. Entries set to -1 are absent (removed by
// the support presolve or dropped because their weight is zero).
struct IndexMap {
    std::vector<std::vector<int>> mu;      // per cluster (or the single joint block)
    std::vector<std::vector<int>> v;       // entropy epigraph, x3 slot holds -v
    std::vector<std::vector<int>> vcp;     // x1 slot of the entropy cone
    std::vector<std::vector<ArcSlot>> u;   // per arc, index s * |V(T)| + t
    std::vector<std::string> labels;       // one per column
    int n() const { return static_cast<int>(labels.size()); }
};

enum class ProblemKind {
    joint_inc,
    joint_small_gamma,
    joint_zero_plus,
    cluster_inc,
    cluster_small_gamma,
    cluster_zero_plus,
};

std::string to_string(ProblemKind k);

struct ProblemSize {
    std::size_t va = 0;        // sum over arcs of |V(S)| |V(T)|
    std::size_t va0 = 0;       // entries with p = 0 on arcs with beta > 0
    std::size_t vc = 0;        // sum over clusters of |V(C)|, or |V(X)| for joint
    std::size_t vt = 0;        // sum over tree edges of |V(C n D)|
    std::size_t clusters = 1;
};

ProblemSize problem_size(const PDG& m, const RootedClusterTree* rct);

// Unreduced standard-form dimensions for each problem kind.
std::pair<std::size_t, std::size_t> expected_dims(ProblemKind k, const ProblemSize& s);

struct CompileOptions {
    // Support presolve plus dropping cones whose objective weight is zero.
    // Off reproduces the textbook program with its exact dimension counts.
    bool reduce = true;
    // Put log p in the u-cones (scaled by beta - gamma alpha) instead of the
    // linear term. Kept for differential testing.
    bool variant_4a = false;
    // Threshold on nu(s) below which a frozen conditional counts as undefined.
    double undefined_mass = 1e-9;
};

// Conditionals extracted from a stage-one optimum.
struct FrozenMarginals {
    // cond[a][s][t] = nu(t | s); rows with defined[a][s] == 0 are uniform
    std::vector<std::vector<std::vector<double>>> cond;
    std::vector<std::vector<double>> source_mass;  // nu(S_a = s)
    std::vector<std::vector<char>> defined;
    std::vector<std::vector<double>> k;            // per cluster entry, or per world
    // entries with stage-one mass above the threshold. Interior-point stage
    // one lands on the analytic center of the optimal face, so an entry that
    // is ~0 there is 0 in every OInc-optimal distribution.
    std::vector<std::vector<char>> stage_one_live;
};

FrozenMarginals freeze_marginals(const PDG& m, const RootedClusterTree& rct, const Beliefs& nu,
                                 double undefined_mass = 1e-9);
FrozenMarginals freeze_marginals(const PDG& m, const JointDistribution& nu,
                                 double undefined_mass = 1e-9);

// Per-arc conditionals used by CCCP to linearize H(T|S) for arcs with
// beta < gamma alpha. Arcs with an empty table keep their cones.
struct Linearization {
    std::vector<std::vector<std::vector<double>>> cond;
};

struct CompiledProblem {
    ProblemKind kind = ProblemKind::cluster_inc;
    conic::ConicProgram program;
    IndexMap index;
    std::vector<Domain> domains;  // one per cluster; the joint forms use one domain
    Support support;
    ProblemSize size;
    double gamma = 0.0;
    // true when the support is empty: no distribution has finite score
    bool infeasible = false;
};

CompiledProblem compile_joint_inc(const PDG& m, const CompileOptions& o = {});
CompiledProblem compile_joint_small_gamma(const PDG& m, double gamma, const CompileOptions& o = {});
CompiledProblem compile_joint_zero_plus(const PDG& m, const FrozenMarginals& f,
                                        const CompileOptions& o = {});

CompiledProblem compile_cluster_inc(const PDG& m, const RootedClusterTree& rct,
                                    const CompileOptions& o = {});
CompiledProblem compile_cluster_small_gamma(const PDG& m, const RootedClusterTree& rct, double gamma,
                                            const CompileOptions& o = {},
                                            const Linearization* lin = nullptr);
CompiledProblem compile_cluster_zero_plus(const PDG& m, const RootedClusterTree& rct,
                                          const FrozenMarginals& f, const Support& stage_one,
                                          const CompileOptions& o = {});

// Per-cluster distributions read off a primal point: clipped at zero and
// renormalized.
Beliefs beliefs_from(const CompiledProblem& cp, const conic::Vec& x);

// H(Pr_mu) from calibrated beliefs, two ways: summing cluster entropies minus
// separator entropies over tree edges, and summing each cluster's entropy
// conditional on the variables shared with its parent.
double entropy_bethe(const PDG& m, const TreeDecomposition& td, const Beliefs& mu);
double entropy_vcp(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu);

}  // namespace pdg
