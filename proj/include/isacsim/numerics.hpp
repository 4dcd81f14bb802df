// Deterministic numerical kernels shared by every other module: unitary DFT,
// Hermitian eigendecomposition, complex SVD, scalar bisection for water
// levels, and a linearly constrained convex QP solver.
//
// Eigendecompositions and SVDs are post-processed to a canonical form
// (descending order, first nonzero vector component rotated to the positive
// real axis) so downstream results are bit-stable across runs.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "isacsim/common.hpp"

namespace isacsim::numerics {

/// Size-n unitary DFT matrix, entry (m,k) = (1/sqrt(n)) e^{-j2pi mk/n}.
inline CMat unitary_dft(Eigen::Index n) {
  require(n >= 1, "unitary_dft: n must be >= 1");
  CMat f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ang = -2.0 * kPi * static_cast<double>(m) * static_cast<double>(k) /
                         static_cast<double>(n);
      f(m, k) = scale * cxd{std::cos(ang), std::sin(ang)};
    }
  return f;
}

namespace detail {

// Rotates v so its first component of non-negligible modulus lies on the
// positive real axis. Returns the applied phase so SVD can rotate U and V
// consistently.
inline cxd canonical_phase(const CVec& v) {
  const double thresh = 1e-12 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > thresh) return std::conj(v(i)) / std::abs(v(i));
  }
  return cxd{1.0, 0.0};
}

}  // namespace detail

struct EigResult {
  CMat vectors;  // columns are eigenvectors
  RVec values;   // descending
};

/// Eigendecomposition of a Hermitian matrix, A = Q diag(values) Q^H.
inline EigResult hermitian_eig(const CMat& a) {
  require(a.rows() == a.cols(), "hermitian_eig: matrix must be square");
  require(all_finite(a), "hermitian_eig: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  check_contract((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
                 "hermitian_eig: input is not Hermitian within 1e-9");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()));
  check_contract(es.info() == Eigen::Success, "hermitian_eig: solver failed");
  const Eigen::Index n = a.rows();
  EigResult out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Eigen sorts ascending; flip to descending.
    const Eigen::Index src = n - 1 - i;
    CVec v = es.eigenvectors().col(src);
    out.vectors.col(i) = v * detail::canonical_phase(v);
    out.values(i) = es.eigenvalues()(src);
  }
  return out;
}

struct SvdResult {
  CMat u;
  RVec singular_values;  // descending, >= 0
  CMat v;
};

/// Full SVD, A = U diag(s) V^H, with canonical phases.
inline SvdResult complex_svd(const CMat& a) {
  require(all_finite(a), "complex_svd: non-finite entries");
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  const Eigen::Index r = std::min(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < out.u.cols(); ++i) {
    const cxd phase = detail::canonical_phase(out.u.col(i));
    out.u.col(i) *= phase;
    if (i < r && i < out.v.cols()) out.v.col(i) *= phase;
  }
  return out;
}

/// Finds mu in [lo, hi] with |eval(mu) - target| <= tol for a monotone
/// nondecreasing eval. Used for every water-filling power constraint.
inline double bisect_water_level(const std::function<double(double)>& eval, double target,
                                 double lo, double hi, double tol) {
  require(hi >= lo, "bisect_water_level: empty bracket");
  double flo = eval(lo), fhi = eval(hi);
  check_contract(flo <= fhi, "bisect_water_level: eval(lo) > eval(hi), not monotone");
  if (target < flo - tol || target > fhi + tol)
    throw InvalidArgument("bisect_water_level: target outside bracket");
  if (std::abs(flo - target) <= tol) return lo;
  if (std::abs(fhi - target) <= tol) return hi;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = eval(mid);
    if (std::abs(f - target) <= tol) return mid;
    if (f < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi)))
      break;
  }
  // Interval exhausted by floating point; accept the midpoint only if the
  // value contract holds, otherwise eval jumps across the target.
  const double f = eval(mid);
  if (std::abs(f - target) <= tol) return mid;
  throw ContractError("bisect_water_level: eval appears discontinuous at the water level");
}

// ---------------------------------------------------------------------------
// Accelerated projected gradient (FISTA) over an arbitrary convex set given
// by its projection operator. The one optimizer driving the QP solver, the
// pulse-design programs, and the precoder subproblems.
// ---------------------------------------------------------------------------

struct ApgResult {
  RVec x;
  int iterations = 0;
  double stat_residual = 0.0;  // natural residual ||x - P(x - grad f(x))||
  bool converged = false;
};

struct ApgOptions {
  double tol = 1e-6;
  int max_iter = 20000;
  int check_every = 25;
  int restart_every = 500;   // momentum restart cadence
  bool backtracking = false; // needs `objective` below
};

/// Minimizes a smooth convex f over {x : x = project(x)}.
/// `step` should be ~1/L for the gradient's Lipschitz constant; with
/// `backtracking` the step adapts downward from that value per iteration.
inline ApgResult apg_minimize(const std::function<double(const RVec&)>& objective,
                              const std::function<RVec(const RVec&)>& grad,
                              const std::function<RVec(const RVec&)>& project,
                              RVec x0, double step, const ApgOptions& opt = {}) {
  RVec x = project(x0);
  RVec y = x, x_prev = x;
  double t = 1.0;
  double s = step;
  ApgResult res;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const RVec gy = grad(y);
    RVec x_new = project(y - s * gy);
    if (opt.backtracking && objective) {
      double fy = objective(y);
      for (int bt = 0; bt < 40; ++bt) {
        const RVec d = x_new - y;
        if (objective(x_new) <= fy + gy.dot(d) + d.squaredNorm() / (2.0 * s) + 1e-14) break;
        s *= 0.5;
        x_new = project(y - s * gy);
      }
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x_prev);
    x_prev = x_new;
    x = std::move(x_new);
    t = t_new;
    if (it % opt.check_every == opt.check_every - 1 || it == opt.max_iter - 1) {
      // Gradient-mapping residual ||x - P(x - s grad)|| / s: zero exactly at
      // KKT points and numerically well-behaved because P sees a nearby point.
      const RVec fixed = project(x - s * grad(x));
      res.stat_residual = (x - fixed).norm() / s;
      if (res.stat_residual <= opt.tol) {
        ++it;
        res.converged = true;
        break;
      }
      if (it % opt.restart_every == opt.restart_every - 1) {
        y = x;
        t = 1.0;
      }
    }
  }
  res.x = x;
  res.iterations = it;
  return res;
}

// ---------------------------------------------------------------------------
// Convex QP:   minimize 0.5 x^T Q x + c^T x
//              s.t. eq_a x = eq_b, ineq_a x <= ineq_b, lo <= x <= hi
// ---------------------------------------------------------------------------

struct QpProblem {
  RMat quad;                // Q, symmetric PSD
  RVec linear;              // c
  RMat eq_a;                // may be 0 x n
  RVec eq_b;
  RMat ineq_a;              // may be 0 x n
  RVec ineq_b;
  RVec lo, hi;              // box bounds; +-inf allowed

  Eigen::Index dim() const { return quad.rows(); }

  void validate() const {
    const Eigen::Index n = quad.rows();
    require(quad.cols() == n && linear.size() == n, "QpProblem: inconsistent Q/c");
    const double scale = std::max(1.0, quad.cwiseAbs().maxCoeff());
    check_contract((quad - quad.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
                   "QpProblem: Q not symmetric");
    Eigen::SelfAdjointEigenSolver<RMat> es(quad, Eigen::EigenvaluesOnly);
    check_contract(es.eigenvalues().minCoeff() >= -1e-9 * scale,
                   "QpProblem: Q not positive semidefinite within 1e-9");
    if (eq_a.size() > 0) require(eq_a.cols() == n && eq_a.rows() == eq_b.size(),
                                 "QpProblem: bad equality block");
    if (ineq_a.size() > 0) require(ineq_a.cols() == n && ineq_a.rows() == ineq_b.size(),
                                   "QpProblem: bad inequality block");
    require(lo.size() == n && hi.size() == n, "QpProblem: bad box bounds");
  }
};

/// Solver outcome. `converged` is false when max_iter was exhausted; the last
/// residuals are always reported.
struct QpResult {
  RVec x;
  double objective = 0.0;
  double kkt_residual = 0.0;       // max(projected-gradient norm, feasibility)
  double feasibility_violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Projection onto the feasible polytope by Dykstra's alternating projections.
// Each halfspace is its own Dykstra set (exact projection per set is what
// gives Dykstra its convergence guarantee); equalities project in closed form
// through a cached LDLT of the Gram matrix.
class PolytopeProjector {
 public:
  explicit PolytopeProjector(const QpProblem& p) : p_(p) {
    if (p_.eq_a.rows() > 0) {
      eq_ldlt_.compute(p_.eq_a * p_.eq_a.transpose());
    }
    for (Eigen::Index i = 0; i < p_.ineq_a.rows(); ++i)
      row_sq_.push_back(std::max(p_.ineq_a.row(i).squaredNorm(), 1e-300));
    num_sets_ = 2 + static_cast<int>(p_.ineq_a.rows());
  }

  RVec project(const RVec& y, double tol, int max_sweeps = 400) const {
    RVec x = y;
    std::vector<RVec> corr(num_sets_, RVec::Zero(y.size()));
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      const RVec prev = x;
      for (int s = 0; s < num_sets_; ++s) {
        const RVec z = x + corr[s];
        RVec px = project_set(z, s);
        corr[s] = z - px;
        x = std::move(px);
      }
      if ((x - prev).norm() <= tol * std::max(1.0, x.norm()) && violation(x) <= tol) break;
    }
    return x;
  }

  double violation(const RVec& x) const {
    double v = 0.0;
    if (p_.eq_a.rows() > 0) v = std::max(v, (p_.eq_a * x - p_.eq_b).cwiseAbs().maxCoeff());
    if (p_.ineq_a.rows() > 0)
      v = std::max(v, (p_.ineq_a * x - p_.ineq_b).maxCoeff());
    v = std::max(v, (p_.lo - x).maxCoeff());
    v = std::max(v, (x - p_.hi).maxCoeff());
    return std::max(v, 0.0);
  }

 private:
  RVec project_set(const RVec& z, int s) const {
    if (s == 0) {  // equality affine set
      if (p_.eq_a.rows() == 0) return z;
      return z - p_.eq_a.transpose() * eq_ldlt_.solve(p_.eq_a * z - p_.eq_b);
    }
    if (s == 1) return z.cwiseMax(p_.lo).cwiseMin(p_.hi);  // box
    const Eigen::Index i = s - 2;                          // single halfspace
    const double slack = p_.ineq_a.row(i).dot(z) - p_.ineq_b(i);
    if (slack <= 0.0) return z;
    return z - (slack / row_sq_[i]) * p_.ineq_a.row(i).transpose();
  }

  const QpProblem& p_;
  Eigen::LDLT<RMat> eq_ldlt_;
  std::vector<double> row_sq_;
  int num_sets_ = 2;
};

// Phase 1: minimize the squared constraint violation from a clipped origin.
inline RVec feasible_point(const QpProblem& p, double tol) {
  PolytopeProjector proj(p);
  RVec x = RVec::Zero(p.dim()).cwiseMax(p.lo).cwiseMin(p.hi);
  x = proj.project(x, 0.1 * tol, 2000);
  if (proj.violation(x) > tol)
    throw InfeasibleError("solve_qp: infeasible problem, min violation " +
                          std::to_string(proj.violation(x)));
  return x;
}

}  // namespace detail

/// Accelerated projected-gradient QP solver (FISTA over the Dykstra-projected
/// polytope). Suited to the small, simply-structured programs this library
/// generates; not a general sparse QP code.
inline QpResult solve_qp(const QpProblem& p, double tol = 1e-6, int max_iter = 20000) {
  p.validate();
  detail::PolytopeProjector proj(p);
  const double proj_tol = std::min(1e-10, 0.01 * tol);

  Eigen::SelfAdjointEigenSolver<RMat> es(p.quad, Eigen::EigenvaluesOnly);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12) +
                     1e-6 * std::max(1.0, p.linear.norm());

  const RVec x0 = detail::feasible_point(p, std::max(tol, 1e-9));
  ApgOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  const auto apg = apg_minimize(
      [&](const RVec& v) { return 0.5 * v.dot(p.quad * v) + p.linear.dot(v); },
      [&](const RVec& v) -> RVec { return p.quad * v + p.linear; },
      [&](const RVec& v) -> RVec { return proj.project(v, proj_tol); }, x0, 1.0 / lip,
      opt);

  QpResult res;
  res.x = apg.x;
  res.objective = 0.5 * apg.x.dot(p.quad * apg.x) + p.linear.dot(apg.x);
  res.feasibility_violation = proj.violation(apg.x);
  res.kkt_residual = std::max(apg.stat_residual, res.feasibility_violation);
  res.iterations = apg.iterations;
  res.converged = apg.converged && res.feasibility_violation <= tol;
  return res;
}

}  // namespace isacsim::numerics
