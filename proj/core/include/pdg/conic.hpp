#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdg::conic {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Exponential cone in solver order: cl{ x1 >= x2 exp(x3 / x2), x2 > 0 }.
struct ConeBlock {
    enum class Kind { orthant, expcone };
    Kind kind;
    int len;
};

struct ConeSpec {
    std::vector<ConeBlock> blocks;

    int dim() const;
    int orthant_count() const;
    int exp_count() const;
    double nu() const;  // barrier parameter
    void add_orthant(int len);
    void add_exp();
};

struct ConicProgram {
    Vec c;
    SpMat A;
    Vec b;
    ConeSpec cones;
    double objective_scale = 1.0;
    double objective_offset = 0.0;

    int n() const { return static_cast<int>(c.size()); }
    int m() const { return static_cast<int>(b.size()); }
    // user-units objective of a primal point
    double objective(const Vec& x) const { return objective_scale * c.dot(x) + objective_offset; }
};

enum class Status { optimal, primal_infeasible, dual_infeasible, max_iter };
std::string to_string(Status s);

struct ConicSolution {
    Vec x, y, s;  // user units, divided by tau when optimal
    double tau = 1.0, kappa = 0.0;
    Status status = Status::max_iter;
    double gap = 0.0;          // <x,s>/tau^2 on the normalized program
    double mu = 0.0;           // (<x,s> + tau kappa) / (nu + 1)
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap_residual = 0.0;  // |pobj - dobj| on the normalized program
    double primal_objective = 0.0;  // user units
    double dual_objective = 0.0;
    int iterations = 0;
    int factorizations = 0;
    bool stalled = false;
    int removed_rows = 0;
    std::vector<double> mu_history;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 500;
    bool corrector = true;
    double neighborhood_beta = 0.9;
    double step_cap = 0.99;
    double regularization = 1e-10;
    int refinement_steps = 3;
    bool normalize = true;
    bool presolve = true;
    // QR pivot threshold for dropping dependent rows; rows built from
    // approximate data need a looser one
    double rank_tolerance = 1e-10;
};

struct BarrierEval {
    double value;
    Eigen::Vector3d gradient;
    Eigen::Matrix3d hessian;
};

struct ConeError : std::domain_error {
    using std::domain_error::domain_error;
};

// F(x) = -log(x2 log(x1/x2) - x3) - log x1 - log x2
BarrierEval barrier_exp(double x1, double x2, double x3);

bool in_exp_cone(const Eigen::Vector3d& x, bool strict = true);
bool in_exp_dual(const Eigen::Vector3d& s, bool strict = true);
// Shadow point -F*'(s): the x with F'(x) = -s.
Eigen::Vector3d exp_dual_shadow(const Eigen::Vector3d& s, const Eigen::Vector3d& guess);
// The central initial vector v with -F'(v) = v.
Eigen::Vector3d exp_central_point();

// Rescales rows and the cost so every data entry lies in [-1, 1].
ConicProgram normalized(const ConicProgram& p, Vec* row_scale = nullptr);

ConicSolution solve(const ConicProgram& p, const SolverOptions& opt);
ConicSolution solve(const ConicProgram& p, double tol = 1e-8);

// Text dump: header, then cone blocks one per line, then COO triplets.
void dump(const ConicProgram& p, std::ostream& os);
ConicProgram parse_dump(std::istream& is);

}  // namespace pdg::conic
