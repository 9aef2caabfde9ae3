#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdg/compile.hpp"
#include "pdg/conic.hpp"
#include "pdg/decomp.hpp"
#include "pdg/model.hpp"

namespace pdg {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conditioning event whose probability could not be separated from zero.
struct ImprobableEventError : std::runtime_error {
    ImprobableEventError(const std::string& what, double bound)
        : std::runtime_error(what), upper_bound(bound) {}
    double upper_bound;  // best upper bound found on the event's probability
};

// (variable, value label) pairs
using Event = std::vector<std::pair<std::string, std::string>>;

struct CalibratedBeliefs {
    PDG model;
    RootedClusterTree rct;
    Beliefs mu;
    double calibration_residual = 0.0;  // max L1 separator disagreement
    // estimated bound on the error of any event probability, from solver
    // residuals; see belief_precision
    double precision = 0.0;
    // proven bound, gamma > 0 only (+inf otherwise): strong convexity of the
    // score gives TV(Pr_mu, Pr*) <= sqrt(s / (2 gamma)) at suboptimality s
    double certified = kInf;
};

struct QueryResult {
    double estimate = 0.0;
    double precision = 0.0;
    double lo = 0.0, hi = 1.0;  // estimate -/+ precision, clipped to [0, 1]
    double certified = kInf;     // proven error bound; +inf when unavailable
    int escalations = 0;  // times delta was squared (conditional queries)
    int iterations = 0;   // search iterations (inference via inconsistency)
    int solves = 0;
};

struct SolveStats {
    std::string stage;
    std::string status;
    int n = 0, m = 0;
    int iterations = 0;
    double gap = 0.0, primal_residual = 0.0, dual_residual = 0.0;
    double seconds = 0.0;
};

struct InferenceReport {
    CalibratedBeliefs beliefs;
    GammaSpec gamma;
    double inconsistency = 0.0;  // nats; +inf when no distribution scores finitely
    double oinc_stage_one = 0.0;  // 0+ only
    double sinc_stage_two = 0.0;  // 0+ only
    bool infinite = false;
    bool local = false;  // CCCP result: a stationary point, not a certified optimum
    int cccp_iterations = 0;
    std::vector<double> cccp_objectives;
    std::vector<SolveStats> stages;
};

struct EngineOptions {
    double tol = 1e-8;
    // smallest tolerance requested from the solver; tighter requests are clamped
    double tol_floor = 1e-10;
    DecompMethod method = DecompMethod::min_fill;
    std::optional<TreeDecomposition> td;
    bool allow_cccp = false;
    int cccp_max_iter = 25;
    double cccp_tol = 1e-8;
    CompileOptions compile;
    conic::SolverOptions solver;
};

InferenceReport infer(const PDG& m, const GammaSpec& gamma, const EngineOptions& o = {});

// Convex-concave procedure for gamma with some beta < gamma alpha.
InferenceReport cccp_infer(const PDG& m, double gamma, const EngineOptions& o = {});

double inconsistency(const PDG& m, const GammaSpec& gamma, const EngineOptions& o = {});

// Pr(event) under the distribution the beliefs determine.
QueryResult query_marginal(const CalibratedBeliefs& cb, const Event& event);

// Pr(target | given) to absolute precision eps by escalating the solve
// precision until the conditioning event is separated from zero.
QueryResult query_conditional(const PDG& m, const GammaSpec& gamma, const Event& target,
                              const Event& given, double eps, const EngineOptions& o = {});

// Pr(event) found by searching for the observation strength that minimizes
// the inconsistency of the PDG plus an observation widget. gamma > 0.
QueryResult infer_via_inconsistency(const PDG& m, double gamma, const Event& event, double eps,
                                    const EngineOptions& o = {});

// The PDG plus an indicator variable for `event` and a unary cpd asserting
// it holds with probability p. Both new arcs have alpha = 0, beta = 1.
PDG observation_widget(const PDG& m, const Event& event, double p);

// Score of Pr_mu computed from the beliefs alone.
double score_from_beliefs(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu, double gamma);
double oinc_from_beliefs(const PDG& m, const RootedClusterTree& rct, const Beliefs& mu);

// Estimated belief error: kResidualToError * sqrt(|V C|) * max(gap, residuals).
// The factor covers the error-to-residual ratios seen in practice (up to ~85).
constexpr double kResidualToError = 100.0;
double belief_precision(std::size_t vc, const conic::ConicSolution& s);
double certified_precision(double gamma, const conic::ConicSolution& s);

int search_iteration_bound(double eps);

}  // namespace pdg
