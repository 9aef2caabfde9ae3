#include "pdg/conic.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pdg::conic {

int ConeSpec::dim() const {
    int n = 0;
    for (const auto& b : blocks) n += b.len;
    return n;
}

int ConeSpec::orthant_count() const {
    int n = 0;
    for (const auto& b : blocks)
        if (b.kind == ConeBlock::Kind::orthant) n += b.len;
    return n;
}

int ConeSpec::exp_count() const {
    int n = 0;
    for (const auto& b : blocks)
        if (b.kind == ConeBlock::Kind::expcone) ++n;
    return n;
}

double ConeSpec::nu() const { return orthant_count() + 3.0 * exp_count(); }

void ConeSpec::add_orthant(int len) {
    if (len <= 0) return;
    if (!blocks.empty() && blocks.back().kind == ConeBlock::Kind::orthant)
        blocks.back().len += len;
    else
        blocks.push_back({ConeBlock::Kind::orthant, len});
}

void ConeSpec::add_exp() { blocks.push_back({ConeBlock::Kind::expcone, 3}); }

std::string to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::primal_infeasible: return "primal-infeasible";
        case Status::dual_infeasible: return "dual-infeasible";
        default: return "max-iter";
    }
}

BarrierEval barrier_exp(double x1, double x2, double x3) {
    if (!(x1 > 0.0) || !(x2 > 0.0)) throw ConeError("point outside the exponential cone");
    double l = std::log(x1 / x2);
    double psi = x2 * l - x3;
    if (!(psi > 0.0)) throw ConeError("point outside the exponential cone");
    Eigen::Vector3d dpsi(x2 / x1, l - 1.0, -1.0);
    Eigen::Matrix3d d2psi;
    d2psi << -x2 / (x1 * x1), 1.0 / x1, 0.0,
             1.0 / x1, -1.0 / x2, 0.0,
             0.0, 0.0, 0.0;
    BarrierEval e;
    e.value = -std::log(psi) - std::log(x1) - std::log(x2);
    e.gradient = -dpsi / psi - Eigen::Vector3d(1.0 / x1, 1.0 / x2, 0.0);
    e.hessian = dpsi * dpsi.transpose() / (psi * psi) - d2psi / psi;
    e.hessian(0, 0) += 1.0 / (x1 * x1);
    e.hessian(1, 1) += 1.0 / (x2 * x2);
    return e;
}

bool in_exp_cone(const Eigen::Vector3d& x, bool strict) {
    if (strict) {
        if (!(x(0) > 0.0) || !(x(1) > 0.0)) return false;
        return x(1) * std::log(x(0) / x(1)) - x(2) > 0.0;
    }
    if (x(1) > 0.0) return x(0) > 0.0 && x(1) * std::log(x(0) / x(1)) - x(2) >= 0.0;
    return x(1) == 0.0 && x(0) >= 0.0 && x(2) <= 0.0;
}

bool in_exp_dual(const Eigen::Vector3d& s, bool strict) {
    if (strict) {
        if (!(s(2) < 0.0) || !(s(0) > 0.0)) return false;
        return std::log(s(0) / -s(2)) + 1.0 - s(1) / s(2) > 0.0;
    }
    if (s(2) < 0.0) return s(0) > 0.0 && std::log(s(0) / -s(2)) + 1.0 - s(1) / s(2) >= 0.0;
    return s(2) == 0.0 && s(0) >= 0.0 && s(1) >= 0.0;
}

Eigen::Vector3d exp_central_point() { return {1.291, 0.805, -0.828}; }

Eigen::Vector3d exp_dual_shadow(const Eigen::Vector3d& s, const Eigen::Vector3d& guess) {
    Eigen::Vector3d x = guess;
    if (!in_exp_cone(x)) x = exp_central_point();
    for (int it = 0; it < 100; ++it) {
        auto e = barrier_exp(x(0), x(1), x(2));
        Eigen::Vector3d g = s + e.gradient;
        Eigen::LDLT<Eigen::Matrix3d> ldlt(e.hessian);
        Eigen::Vector3d dx = -ldlt.solve(g);
        double lam = std::sqrt(std::max(0.0, -g.dot(dx)));
        if (lam < 1e-13) break;
        double t = lam < 0.25 ? 1.0 : 1.0 / (1.0 + lam);
        Eigen::Vector3d xn = x + t * dx;
        while (!in_exp_cone(xn) && t > 1e-12) {
            t *= 0.5;
            xn = x + t * dx;
        }
        x = xn;
        if (lam < 1e-10) break;
    }
    return x;
}

ConicProgram normalized(const ConicProgram& p, Vec* row_scale) {
    ConicProgram q = p;
    Vec rmax = Vec::Zero(p.m());
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.A, k); it; ++it)
            rmax(it.row()) = std::max(rmax(it.row()), std::abs(it.value()));
    Vec d(p.m());
    for (int i = 0; i < p.m(); ++i) {
        double r = std::max(rmax(i), std::abs(p.b(i)));
        d(i) = r > 0.0 ? 1.0 / r : 1.0;
    }
    q.A = d.asDiagonal() * p.A;
    q.b = d.cwiseProduct(p.b);
    double cmax = p.c.size() ? p.c.cwiseAbs().maxCoeff() : 0.0;
    if (cmax > 0.0) {
        q.c = p.c / cmax;
        q.objective_scale = p.objective_scale * cmax;
    }
    if (row_scale) *row_scale = d;
    return q;
}

namespace {

constexpr double kTiny = 1e-300;
constexpr double kExpProximity = 1.0;
// regularization is raised up to this when directions break down
constexpr double kMaxRegularization = 1e-6;

struct Layout {
    std::vector<int> orth;    // orthant coordinates
    std::vector<int> expoff;  // first coordinate of each exp block
    double nu = 0.0;
};

Layout layout_of(const ConeSpec& k) {
    Layout l;
    int off = 0;
    for (const auto& b : k.blocks) {
        if (b.kind == ConeBlock::Kind::orthant) {
            for (int i = 0; i < b.len; ++i) l.orth.push_back(off + i);
        } else {
            if (b.len != 3) throw std::invalid_argument("exponential cone blocks have length 3");
            l.expoff.push_back(off);
        }
        off += b.len;
    }
    l.nu = static_cast<double>(l.orth.size()) + 3.0 * static_cast<double>(l.expoff.size());
    return l;
}

Eigen::Vector3d blk(const Vec& v, int off) { return v.segment<3>(off); }

// Scaling data for one iterate.
struct Scaling {
    Vec hdiag;                          // orthant s/x, indexed like x (zero elsewhere)
    std::vector<Eigen::Matrix3d> hexp;  // per exp block
    Vec stilde;                         // -F'(x)
};

Eigen::Matrix3d exp_scaling(const Eigen::Vector3d& x, const Eigen::Vector3d& s) {
    const double nu = 3.0;
    double mu = x.dot(s) / nu;
    auto e = barrier_exp(x(0), x(1), x(2));
    Eigen::Matrix3d Fxx = e.hessian;
    Eigen::Vector3d st = -e.gradient;
    Eigen::Matrix3d fallback = mu * Fxx;
    if (!(mu > 0.0)) return Fxx;
    Eigen::Vector3d xt;
    try {
        xt = exp_dual_shadow(s, x / mu);
    } catch (const ConeError&) {
        return fallback;
    }
    double mut = xt.dot(st) / nu;
    Eigen::Vector3d ds = s - mu * st;
    Eigen::Vector3d dx = x - mu * xt;
    double d1 = ds.dot(dx);
    Eigen::Vector3d w = Fxx * xt - mut * st;
    double d2 = xt.dot(Fxx * xt) - nu * mut * mut;
    double scale = std::max(1.0, s.squaredNorm());
    if (!(d1 > 1e-13 * scale) || !(d2 > 1e-13 * std::max(1.0, xt.squaredNorm() * Fxx.norm())))
        return fallback;
    Eigen::Matrix3d H = mu * Fxx + s * s.transpose() / (nu * mu) - mu * st * st.transpose() / nu +
                        ds * ds.transpose() / d1 - mu * w * w.transpose() / d2;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    if (es.info() != Eigen::Success || !(es.eigenvalues()(0) > 0.0)) return fallback;
    if (!(es.eigenvalues()(0) > 1e-14 * es.eigenvalues()(2))) return fallback;
    return H;
}

Scaling compute_scaling(const Layout& l, const Vec& x, const Vec& s) {
    Scaling sc;
    sc.hdiag = Vec::Zero(x.size());
    sc.stilde = Vec::Zero(x.size());
    for (int i : l.orth) {
        sc.hdiag(i) = s(i) / x(i);
        sc.stilde(i) = 1.0 / x(i);
    }
    sc.hexp.reserve(l.expoff.size());
    for (int off : l.expoff) {
        Eigen::Vector3d xb = blk(x, off), sb = blk(s, off);
        sc.hexp.push_back(exp_scaling(xb, sb));
        sc.stilde.segment<3>(off) = -barrier_exp(xb(0), xb(1), xb(2)).gradient;
    }
    return sc;
}

Vec apply_h(const Layout& l, const Scaling& sc, const Vec& v) {
    Vec out = sc.hdiag.cwiseProduct(v);
    for (std::size_t k = 0; k < l.expoff.size(); ++k) {
        int off = l.expoff[k];
        out.segment<3>(off) = sc.hexp[k] * v.segment<3>(off);
    }
    return out;
}

class KktSolver {
public:
    KktSolver(const SpMat& A, const Layout& l, double reg, int refine)
        : A_(A), At_(A.transpose()), l_(l), reg_(reg), refine_(refine) {
        n_ = static_cast<int>(A.cols());
        m_ = static_cast<int>(A.rows());
    }

    // Escalates the regularization when the quasi-definite factorization
    // breaks down; iterative refinement absorbs the perturbation.
    bool factor(const Scaling& sc) {
        sc_ = &sc;
        for (double reg = reg_; reg <= reg_ * 1e6; reg *= 100.0)
            if (factor_with(sc, reg)) return true;
        return false;
    }

    bool escalate() {
        if (reg_ >= kMaxRegularization) return false;
        reg_ = std::min(reg_ * 100.0, kMaxRegularization);
        return true;
    }

    // Solves [[H, A^T], [A, 0]] [u; v] = [r1; r2].
    void solve(const Vec& r1, const Vec& r2, Vec& u, Vec& v) const {
        Vec rhs(n_ + m_);
        rhs << r1, r2;
        Vec z = ldlt_.solve(rhs);
        for (int it = 0; it < refine_; ++it) {
            Vec zu = z.head(n_), zv = z.tail(m_);
            Vec res(n_ + m_);
            res.head(n_) = r1 - apply_h(l_, *sc_, zu) - At_ * zv;
            res.tail(m_) = r2 - A_ * zu;
            if (!(res.lpNorm<Eigen::Infinity>() > 1e-15 * (1.0 + rhs.lpNorm<Eigen::Infinity>())))
                break;
            z += ldlt_.solve(res);
        }
        u = z.head(n_);
        v = z.tail(m_);
    }

private:
    bool factor_with(const Scaling& sc, double reg) {
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(n_ + 6 * l_.expoff.size() + A_.nonZeros() + m_));
        for (int i : l_.orth) t.emplace_back(i, i, sc.hdiag(i) + reg);
        for (std::size_t k = 0; k < l_.expoff.size(); ++k) {
            int off = l_.expoff[k];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j <= i; ++j)
                    t.emplace_back(off + i, off + j, sc.hexp[k](i, j) + (i == j ? reg : 0.0));
        }
        for (int k = 0; k < A_.outerSize(); ++k)
            for (SpMat::InnerIterator it(A_, k); it; ++it)
                t.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < m_; ++i) t.emplace_back(n_ + i, n_ + i, -reg);
        SpMat K(n_ + m_, n_ + m_);
        K.setFromTriplets(t.begin(), t.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(K);
            analyzed_ = true;
        }
        ldlt_.factorize(K);
        return ldlt_.info() == Eigen::Success;
    }

    const SpMat& A_;
    SpMat At_;
    const Layout& l_;
    double reg_;
    int refine_;
    int n_ = 0, m_ = 0;
    bool analyzed_ = false;
    const Scaling* sc_ = nullptr;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

struct Point {
    Vec x, y, s;
    double tau = 1.0, kappa = 1.0;
};

struct Dir {
    Vec dx, dy, ds;
    double dtau = 0.0, dkappa = 0.0;
};

double max_step_exp(const Eigen::Vector3d& v, const Eigen::Vector3d& dv, bool dual) {
    auto inside = [&](double a) {
        Eigen::Vector3d p = v + a * dv;
        return dual ? in_exp_dual(p) : in_exp_cone(p);
    };
    if (inside(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        if (inside(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

double max_step(const Layout& l, const Point& z, const Dir& d) {
    double a = 1.0;
    for (int i : l.orth) {
        if (d.dx(i) < 0.0) a = std::min(a, -z.x(i) / d.dx(i));
        if (d.ds(i) < 0.0) a = std::min(a, -z.s(i) / d.ds(i));
    }
    if (d.dtau < 0.0) a = std::min(a, -z.tau / d.dtau);
    if (d.dkappa < 0.0) a = std::min(a, -z.kappa / d.dkappa);
    for (int off : l.expoff) {
        a = std::min(a, max_step_exp(blk(z.x, off), blk(d.dx, off), false));
        a = std::min(a, max_step_exp(blk(z.s, off), blk(d.ds, off), true));
    }
    return std::max(0.0, a);
}

Point advance(const Point& z, const Dir& d, double a) {
    Point p;
    p.x = z.x + a * d.dx;
    p.y = z.y + a * d.dy;
    p.s = z.s + a * d.ds;
    p.tau = z.tau + a * d.dtau;
    p.kappa = z.kappa + a * d.dkappa;
    return p;
}

double complementarity(const Layout& l, const Point& z) {
    return (z.x.dot(z.s) + z.tau * z.kappa) / (l.nu + 1.0);
}

bool interior(const Layout& l, const Point& z) {
    if (!(z.tau > 0.0) || !(z.kappa > 0.0)) return false;
    for (int i : l.orth)
        if (!(z.x(i) > 0.0) || !(z.s(i) > 0.0)) return false;
    for (int off : l.expoff)
        if (!in_exp_cone(blk(z.x, off)) || !in_exp_dual(blk(z.s, off))) return false;
    return true;
}

// Largest |s/mu + F'(x)| over exp blocks, in the F''(x)^-1 norm.
double exp_proximity(const Layout& l, const Point& z, double mu) {
    double worst = 0.0;
    for (int off : l.expoff) {
        Eigen::Vector3d xb = blk(z.x, off), sb = blk(z.s, off);
        auto e = barrier_exp(xb(0), xb(1), xb(2));
        Eigen::Vector3d psi = sb / mu + e.gradient;
        Eigen::LDLT<Eigen::Matrix3d> ldlt(e.hessian);
        worst = std::max(worst, std::sqrt(std::max(0.0, psi.dot(ldlt.solve(psi)))));
    }
    return worst;
}

// Each cone block's local complementarity stays within a (1 - beta) factor
// of the global one.
bool in_neighborhood(const Layout& l, const Point& z, double beta) {
    if (!interior(l, z)) return false;
    double mu = complementarity(l, z);
    double lb = (1.0 - beta) * mu;
    if (z.tau * z.kappa < lb) return false;
    for (int i : l.orth)
        if (z.x(i) * z.s(i) < lb) return false;
    for (int off : l.expoff)
        if (blk(z.x, off).dot(blk(z.s, off)) / 3.0 < lb) return false;
    // products alone let a nonsymmetric block drift off the central path
    return exp_proximity(l, z, mu) <= kExpProximity;
}

struct Residuals {
    Vec rp, rd;
    double rg;
};

Residuals residuals(const ConicProgram& p, const Point& z) {
    Residuals r;
    r.rp = p.A * z.x - p.b * z.tau;
    r.rd = -(p.A.transpose() * z.y) + p.c * z.tau - z.s;
    r.rg = p.b.dot(z.y) - p.c.dot(z.x) - z.kappa;
    return r;
}

class Hsd {
public:
    Hsd(const ConicProgram& p, const Layout& l, const SolverOptions& o)
        : p_(p), l_(l), o_(o), kkt_(p.A, l, o.regularization, o.refinement_steps) {}

    bool prepare(const Point& z) {
        sc_ = compute_scaling(l_, z.x, z.s);
        ++factorizations;
        if (!kkt_.factor(sc_)) return false;
        kkt_.solve(-p_.c, p_.b, p2_, q2_);
        // p2' H p2 >= 0 in exact arithmetic but loses all digits near the
        // boundary; kappa/tau is a valid lower bound.
        denom_ = std::max(z.kappa / z.tau + p2_.dot(apply_h(l_, sc_, p2_)), z.kappa / z.tau);
        return std::isfinite(denom_) && denom_ > 0.0;
    }

    // eta scales the residual right-hand side; target is the centering value.
    Dir direction(const Point& z, const Residuals& r, double eta, double target) const {
        Vec rs = -z.s + target * sc_.stilde;
        double rk = -z.tau * z.kappa + target;
        Vec p1, q1;
        kkt_.solve(-eta * r.rd + rs, -eta * r.rp, p1, q1);
        Dir d;
        d.dtau = (-eta * r.rg + p_.b.dot(q1) + p_.c.dot(p1) + rk / z.tau) / denom_;
        d.dx = p1 + d.dtau * p2_;
        d.dy = -(q1 + d.dtau * q2_);
        d.ds = rs - apply_h(l_, sc_, d.dx);
        d.dkappa = (rk - z.kappa * d.dtau) / z.tau;
        return d;
    }

    // Raises the KKT regularization; false once it is at the cap.
    bool escalate() { return kkt_.escalate(); }

    int factorizations = 0;

private:
    const ConicProgram& p_;
    const Layout& l_;
    const SolverOptions& o_;
    KktSolver kkt_;
    Scaling sc_;
    Vec p2_, q2_;
    double denom_ = 1.0;
};

// Removes linearly dependent rows; returns false if b is inconsistent.
bool presolve_rows(const ConicProgram& p, std::vector<int>& keep, double rank_tol) {
    keep.clear();
    int m = p.m();
    if (m == 0) return true;
    SpMat At = p.A.transpose();
    At.makeCompressed();
    Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr;
    qr.setPivotThreshold(rank_tol);
    qr.compute(At);
    if (qr.info() != Eigen::Success) {
        for (int i = 0; i < m; ++i) keep.push_back(i);
        return true;
    }
    int r = static_cast<int>(qr.rank());
    const auto& perm = qr.colsPermutation();
    for (int k = 0; k < r; ++k) keep.push_back(perm.indices()(k));
    std::sort(keep.begin(), keep.end());
    if (r == m) return true;
    // consistency: minimum-norm solution of the kept rows must satisfy all rows
    std::vector<Triplet> t;
    std::vector<int> pos(m, -1);
    for (std::size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<int>(i);
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.A, k); it; ++it)
            if (pos[it.row()] >= 0) t.emplace_back(pos[it.row()], it.col(), it.value());
    SpMat Ak(r, p.n());
    Ak.setFromTriplets(t.begin(), t.end());
    Vec bk(r);
    for (int i = 0; i < r; ++i) bk(i) = p.b(keep[i]);
    SpMat AAt = Ak * Ak.transpose();
    Eigen::SimplicialLDLT<SpMat> ch(AAt);
    if (ch.info() != Eigen::Success) {
        keep.clear();
        for (int i = 0; i < m; ++i) keep.push_back(i);
        return true;
    }
    Vec x0 = Ak.transpose() * ch.solve(bk);
    double res = (p.A * x0 - p.b).lpNorm<Eigen::Infinity>();
    if (res > 1e-7 * (1.0 + p.b.lpNorm<Eigen::Infinity>())) {
        keep.clear();
        for (int i = 0; i < m; ++i) keep.push_back(i);
        return false;
    }
    return true;
}

ConicProgram select_rows(const ConicProgram& p, const std::vector<int>& keep) {
    ConicProgram q = p;
    std::vector<int> pos(p.m(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<int>(i);
    std::vector<Triplet> t;
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.A, k); it; ++it)
            if (pos[it.row()] >= 0) t.emplace_back(pos[it.row()], it.col(), it.value());
    q.A = SpMat(static_cast<int>(keep.size()), p.n());
    q.A.setFromTriplets(t.begin(), t.end());
    q.b = Vec(static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) q.b(static_cast<int>(i)) = p.b(keep[i]);
    return q;
}

}  // namespace

ConicSolution solve(const ConicProgram& p, double tol) {
    SolverOptions o;
    o.tol = tol;
    return solve(p, o);
}

ConicSolution solve(const ConicProgram& input, const SolverOptions& opt) {
    if (input.cones.dim() != input.n() || input.A.cols() != input.n() ||
        input.A.rows() != input.m())
        throw std::invalid_argument("conic program dimensions are inconsistent");
    Layout l = layout_of(input.cones);

    Vec row_scale = Vec::Ones(input.m());
    ConicProgram norm = opt.normalize ? normalized(input, &row_scale) : input;
    double cscale = norm.objective_scale / input.objective_scale;

    ConicSolution sol;
    std::vector<int> keep;
    bool consistent = true;
    if (opt.presolve) consistent = presolve_rows(norm, keep, opt.rank_tolerance);
    else
        for (int i = 0; i < norm.m(); ++i) keep.push_back(i);
    ConicProgram p = select_rows(norm, keep);
    sol.removed_rows = norm.m() - static_cast<int>(keep.size());

    Hsd* hsd_ptr = nullptr;
    auto finish = [&](const Point& z, Status st) {
        sol.status = st;
        if (hsd_ptr) sol.factorizations = hsd_ptr->factorizations;
        double div = st == Status::optimal || st == Status::max_iter ? z.tau : 1.0;
        sol.tau = z.tau;
        sol.kappa = z.kappa;
        sol.x = z.x / div;
        Vec yfull = Vec::Zero(input.m());
        for (std::size_t i = 0; i < keep.size(); ++i) yfull(keep[i]) = z.y(static_cast<int>(i)) / div;
        sol.y = cscale * row_scale.cwiseProduct(yfull);
        sol.s = cscale * z.s / div;
        sol.primal_objective = input.objective(sol.x);
        sol.dual_objective = input.objective_scale * input.b.dot(sol.y) + input.objective_offset;
        return sol;
    };

    int n = p.n();
    Point z;
    z.x = Vec::Ones(n);
    z.s = Vec::Ones(n);
    for (int off : l.expoff) {
        z.x.segment<3>(off) = exp_central_point();
        z.s.segment<3>(off) = exp_central_point();
    }
    z.y = Vec::Zero(p.m());
    z.tau = 1.0;
    z.kappa = 1.0;

    if (!consistent) {
        sol.primal_residual = std::numeric_limits<double>::infinity();
        return finish(z, Status::primal_infeasible);
    }

    Hsd hsd(p, l, opt);
    hsd_ptr = &hsd;
    double bnorm = p.b.size() ? p.b.lpNorm<Eigen::Infinity>() : 0.0;
    double cnorm = p.c.size() ? p.c.lpNorm<Eigen::Infinity>() : 0.0;
    int slow = 0;
    double prev_mu = complementarity(l, z);
    // on a stall the least-violating iterate is reported, not the last one
    Point best = z;
    double best_merit = std::numeric_limits<double>::infinity();
    std::array<double, 5> best_metrics{};

    for (int it = 0; it <= opt.max_iter; ++it) {
        Residuals r = residuals(p, z);
        double mu = complementarity(l, z);
        sol.mu = mu;
        sol.mu_history.push_back(mu);
        sol.iterations = it;
        double pobj = p.c.dot(z.x) / z.tau, dobj = p.b.dot(z.y) / z.tau;
        sol.primal_residual = (p.A * z.x / z.tau - p.b).lpNorm<Eigen::Infinity>() / (1.0 + bnorm);
        sol.dual_residual = r.rd.lpNorm<Eigen::Infinity>() / z.tau / (1.0 + cnorm);
        sol.gap = z.x.dot(z.s) / (z.tau * z.tau);
        sol.gap_residual = std::abs(pobj - dobj);
        double merit = std::max({sol.primal_residual, sol.dual_residual, sol.gap,
                                 sol.gap_residual / (1.0 + std::abs(pobj))});
        if (merit < best_merit) {
            best_merit = merit;
            best = z;
            best_metrics = {sol.primal_residual, sol.dual_residual, sol.gap, sol.gap_residual, mu};
        }
        if (sol.primal_residual <= opt.tol && sol.dual_residual <= opt.tol && sol.gap <= opt.tol &&
            sol.gap_residual <= opt.tol * (1.0 + std::abs(pobj)))
            return finish(z, Status::optimal);
        double by = p.b.dot(z.y), cx = p.c.dot(z.x);
        if (z.tau < z.kappa) {
            if (by > 0.0 &&
                (p.A.transpose() * z.y + z.s).lpNorm<Eigen::Infinity>() <= opt.tol * by)
                return finish(z, Status::primal_infeasible);
            if (cx < 0.0 && (p.A * z.x).lpNorm<Eigen::Infinity>() <= opt.tol * -cx)
                return finish(z, Status::dual_infeasible);
        }
        if (it == opt.max_iter) break;

        if (!hsd.prepare(z)) {
            if (hsd.escalate()) continue;
            sol.stalled = true;
            break;
        }
        Dir aff = hsd.direction(z, r, 1.0, 0.0);
        double a_aff = max_step(l, z, aff);
        double sigma = std::pow(1.0 - std::min(1.0, a_aff), 3);
        sigma = std::clamp(sigma, 1e-8, 1.0);
        Dir d = hsd.direction(z, r, 1.0 - sigma, sigma * mu);
        double a = std::min(1.0, opt.step_cap * max_step(l, z, d));
        Point zn = advance(z, d, a);
        while (!in_neighborhood(l, zn, opt.neighborhood_beta) && a > 1e-12) {
            a *= 0.7;
            zn = advance(z, d, a);
        }
        if (!(a > 1e-12)) {
            // retry with a pure centering step
            d = hsd.direction(z, r, 0.0, mu);
            a = std::min(1.0, opt.step_cap * max_step(l, z, d));
            zn = advance(z, d, a);
            while (!interior(l, zn) && a > 1e-12) {
                a *= 0.5;
                zn = advance(z, d, a);
            }
            if (!(a > 1e-12)) {
                // garbage directions from an ill-conditioned KKT system
                if (hsd.escalate()) continue;
                sol.stalled = true;
                break;
            }
        }
        if (opt.corrector && hsd.prepare(zn)) {
            Residuals rn = residuals(p, zn);
            double mun = complementarity(l, zn);
            Dir c = hsd.direction(zn, rn, 0.0, mun);
            double ac = std::min(1.0, opt.step_cap * max_step(l, zn, c));
            Point zc = advance(zn, c, ac);
            while (ac > 1e-6 && (!in_neighborhood(l, zc, opt.neighborhood_beta) ||
                                 complementarity(l, zc) > mun * (1.0 + 1e-9))) {
                ac *= 0.5;
                zc = advance(zn, c, ac);
            }
            if (ac > 1e-6) zn = zc;
        }
        // pull a drifting iterate back toward the central path
        for (int k = 0; k < 3 && exp_proximity(l, zn, complementarity(l, zn)) > 0.5 * kExpProximity; ++k) {
            if (!hsd.prepare(zn)) break;
            Residuals rn = residuals(p, zn);
            Dir c = hsd.direction(zn, rn, 0.0, complementarity(l, zn));
            double ac = std::min(1.0, opt.step_cap * max_step(l, zn, c));
            Point zc = advance(zn, c, ac);
            while (ac > 1e-8 && !in_neighborhood(l, zc, opt.neighborhood_beta)) {
                ac *= 0.5;
                zc = advance(zn, c, ac);
            }
            if (!(ac > 1e-8)) break;
            zn = zc;
        }
        z = zn;
        double mu_new = complementarity(l, z);
        if (mu_new > 0.999 * prev_mu) ++slow;
        else slow = 0;
        prev_mu = mu_new;
        if (slow >= 30 || !(mu_new > kTiny)) {
            sol.stalled = true;
            break;
        }
    }
    sol.primal_residual = best_metrics[0];
    sol.dual_residual = best_metrics[1];
    sol.gap = best_metrics[2];
    sol.gap_residual = best_metrics[3];
    sol.mu = best_metrics[4];
    return finish(best, Status::max_iter);
}

void dump(const ConicProgram& p, std::ostream& os) {
    os.precision(17);
    os << "conic " << p.n() << ' ' << p.m() << ' ' << p.cones.blocks.size() << ' '
       << p.A.nonZeros() << '\n';
    os << "scale " << p.objective_scale << ' ' << p.objective_offset << '\n';
    for (const auto& b : p.cones.blocks)
        os << (b.kind == ConeBlock::Kind::orthant ? "orthant " : "exp ") << b.len << '\n';
    for (int j = 0; j < p.n(); ++j)
        if (p.c(j) != 0.0) os << "c " << j << ' ' << p.c(j) << '\n';
    for (int i = 0; i < p.m(); ++i)
        if (p.b(i) != 0.0) os << "b " << i << ' ' << p.b(i) << '\n';
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.A, k); it; ++it)
            os << "A " << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os << "end\n";
}

ConicProgram parse_dump(std::istream& is) {
    auto fail = [](const std::string& why) { return std::runtime_error("conic dump: " + why); };
    std::string tag;
    int n = 0, m = 0;
    std::size_t nb = 0, nnz = 0;
    if (!(is >> tag >> n >> m >> nb >> nnz) || tag != "conic" || n < 0 || m < 0)
        throw fail("bad header");
    ConicProgram p;
    if (!(is >> tag >> p.objective_scale >> p.objective_offset) || tag != "scale")
        throw fail("bad scale line");
    for (std::size_t k = 0; k < nb; ++k) {
        int len = 0;
        if (!(is >> tag >> len)) throw fail("bad cone line");
        if (tag == "orthant") p.cones.blocks.push_back({ConeBlock::Kind::orthant, len});
        else if (tag == "exp" && len == 3) p.cones.blocks.push_back({ConeBlock::Kind::expcone, 3});
        else throw fail("bad cone line");
    }
    p.c = Vec::Zero(n);
    p.b = Vec::Zero(m);
    std::vector<Triplet> t;
    while (is >> tag) {
        if (tag == "end") break;
        if (tag == "c") {
            int j; double v;
            if (!(is >> j >> v) || j < 0 || j >= n) throw fail("bad c entry");
            p.c(j) = v;
        } else if (tag == "b") {
            int i; double v;
            if (!(is >> i >> v) || i < 0 || i >= m) throw fail("bad b entry");
            p.b(i) = v;
        } else if (tag == "A") {
            int i, j; double v;
            if (!(is >> i >> j >> v) || i < 0 || i >= m || j < 0 || j >= n) throw fail("bad A entry");
            t.emplace_back(i, j, v);
        } else {
            throw fail("unknown tag '" + tag + "'");
        }
    }
    if (t.size() != nnz) throw fail("nonzero count mismatch");
    p.A = SpMat(m, n);
    p.A.setFromTriplets(t.begin(), t.end());
    if (p.cones.dim() != n) throw fail("cone dimensions do not sum to n");
    return p;
}

}  // namespace pdg::conic
