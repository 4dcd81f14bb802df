// Capacity-distortion solver for the scalar real Gaussian channel with
// perfect feedback: y = h x + n, z = y, h ~ N(0,1), n ~ N(0,1). The decoder
// knows h, the sensing receiver estimates h from z with the MMSE estimator,
// and the input distribution maximizes I(x; y | h) subject to an average
// distortion cap and a power budget.
//
// The estimation cost is closed form: observing z = h x + n with a unit
// Gaussian prior on h is a scalar Gaussian inference problem, so the
// posterior variance is 1/(1 + x^2) regardless of the realized z. Everything
// else is discretized: a symmetric input grid, Gauss-Hermite nodes for h, and
// Gauss-Hermite nodes for y around each (x, h) mean.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/pcs.hpp"

namespace isacsim::cdtheory {

/// MMSE of h ~ N(0,1) from z = h x + n, n ~ N(0,1): e(x) = 1/(1 + x^2).
inline double sensing_cost(double x) { return 1.0 / (1.0 + x * x); }

struct CdProblem {
  RVec x_grid;       // symmetric about 0
  RVec h_nodes;      // state nodes (defaults: Gauss-Hermite for N(0,1))
  RVec h_weights;    // sum to 1
  int y_order = 21;  // Gauss-Hermite order for the output integral
  double power_budget = 10.0;
  double distortion_cap = 1.0;

  void validate() const {
    require(x_grid.size() >= 3, "CdProblem: grid too small");
    const Eigen::Index n = x_grid.size();
    for (Eigen::Index i = 0; i < n; ++i)
      require(std::abs(x_grid(i) + x_grid(n - 1 - i)) <= 1e-12,
              "CdProblem: x grid must be symmetric about 0");
    require(h_nodes.size() == h_weights.size() && h_nodes.size() >= 1,
            "CdProblem: bad h quadrature");
    check_contract(std::abs(h_weights.sum() - 1.0) <= 1e-12,
                   "CdProblem: h weights must sum to 1");
    require(power_budget > 0.0, "CdProblem: power budget must be positive");
  }
};

/// Symmetric grid of `points` values on [-3 sqrt(B), 3 sqrt(B)]. 61 points
/// puts +-sqrt(B) exactly on the grid (index +-10 of 30), which keeps the
/// BPSK-like endpoint representable.
inline RVec default_grid(double b, Eigen::Index points = 61) {
  require(points >= 3 && points % 2 == 1, "default_grid: need an odd point count");
  RVec g(points);
  const double half = 3.0 * std::sqrt(b);
  for (Eigen::Index i = 0; i < points; ++i)
    g(i) = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(points - 1);
  // Symmetrize exactly against roundoff.
  for (Eigen::Index i = 0; i < points / 2; ++i) g(points - 1 - i) = -g(i);
  g(points / 2) = 0.0;
  return g;
}

inline CdProblem make_problem(double b, double d, Eigen::Index grid_points = 61,
                              int h_order = 13, int y_order = 21) {
  CdProblem p;
  p.x_grid = default_grid(b, grid_points);
  const auto gh = pcs::GhQuadrature::make(h_order);
  p.h_nodes = std::sqrt(2.0) * gh.nodes;  // h ~ N(0,1)
  p.h_weights = gh.weights / std::sqrt(kPi);
  p.y_order = y_order;
  p.power_budget = b;
  p.distortion_cap = d;
  p.validate();
  return p;
}

namespace detail {

// Precomputed Gaussian kernels K[i][h][b][j] = exp(-(h(x_i - x_j) + u_b)^2/2)
// (p-independent). The mixture sum uses the fast table; nodes where it
// underflows are recomputed in the log domain so the KL scores stay exact.
class CdEvaluator {
 public:
  explicit CdEvaluator(const CdProblem& p) : p_(p) {
    const auto gh = pcs::GhQuadrature::make(p.y_order);
    u_nodes_ = std::sqrt(2.0) * gh.nodes;
    u_weights_ = gh.weights / std::sqrt(kPi);
    const Eigen::Index n = p.x_grid.size(), nh = p.h_nodes.size(),
                       nb = u_nodes_.size();
    expo_.resize(static_cast<std::size_t>(n * nh * nb * n));
    kern_.resize(expo_.size());
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index h = 0; h < nh; ++h)
        for (Eigen::Index b = 0; b < nb; ++b)
          for (Eigen::Index j = 0; j < n; ++j, ++idx) {
            const double d = p.h_nodes(h) * (p.x_grid(i) - p.x_grid(j)) + u_nodes_(b);
            expo_[idx] = -0.5 * d * d;
            kern_[idx] = std::exp(expo_[idx]);
          }
  }

  /// KL_i = E_h E_{y|x_i,h}[ ln p(y|x_i,h) - ln p(y|h) ] for every grid
  /// input, under the mixture induced by `probs`. I = sum_i p_i KL_i.
  RVec kl_scores(const RVec& probs) const {
    const Eigen::Index n = p_.x_grid.size(), nh = p_.h_nodes.size(),
                       nb = u_nodes_.size();
    std::vector<double> logp(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
      logp[static_cast<std::size_t>(j)] =
          probs(j) > 0.0 ? std::log(probs(j)) : -std::numeric_limits<double>::infinity();
    RVec kl = RVec::Zero(n);
    std::size_t base = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc_i = 0.0;
      for (Eigen::Index h = 0; h < nh; ++h) {
        for (Eigen::Index b = 0; b < nb; ++b, base += static_cast<std::size_t>(n)) {
          double mix = 0.0;
          for (Eigen::Index j = 0; j < n; ++j)
            mix += probs(j) * kern_[base + static_cast<std::size_t>(j)];
          double ln_mix;
          if (mix > 1e-280) {
            ln_mix = std::log(mix);
          } else {
            // Log-domain fallback for far-tail nodes.
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
              mx = std::max(mx, logp[static_cast<std::size_t>(j)] +
                                    expo_[base + static_cast<std::size_t>(j)]);
            double s = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
              s += std::exp(logp[static_cast<std::size_t>(j)] +
                            expo_[base + static_cast<std::size_t>(j)] - mx);
            ln_mix = mx + std::log(s);
          }
          const double u = u_nodes_(b);
          acc_i += p_.h_weights(h) * u_weights_(b) * (-0.5 * u * u - ln_mix);
        }
      }
      kl(i) = acc_i;
    }
    return kl;
  }

 private:
  const CdProblem& p_;
  RVec u_nodes_, u_weights_;
  std::vector<double> expo_;
  std::vector<double> kern_;
};

// Exact minimization of the capacity upper bound over the two nonnegative
// multipliers: min_{l >= 0} max_i [kl_i - l_d a_i - l_b b_i]. This is a tiny
// LP in (t, l_d, l_b); vertices come from triples of active constraints, and
// any feasible vertex certifies an upper bound, so enumeration is safe.
inline double dual_bound(const RVec& kl, const RVec& a, const RVec& b) {
  const Eigen::Index n = kl.size();
  double best = std::numeric_limits<double>::infinity();
  auto try_point = [&](double ld, double lb) {
    if (!(ld >= -1e-12) || !(lb >= -1e-12)) return;
    double t = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i)
      t = std::max(t, kl(i) - std::max(ld, 0.0) * a(i) - std::max(lb, 0.0) * b(i));
    best = std::min(best, t);
  };
  try_point(0.0, 0.0);
  // One multiplier at zero: 1-D intersections of constraint pairs.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(a(i) - a(j)) > 1e-14)
        try_point((kl(i) - kl(j)) / (a(i) - a(j)), 0.0);
      if (std::abs(b(i) - b(j)) > 1e-14)
        try_point(0.0, (kl(i) - kl(j)) / (b(i) - b(j)));
    }
  // Interior vertices: triples of constraints.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const double a1 = a(i) - a(j), b1 = b(i) - b(j), r1 = kl(i) - kl(j);
        const double a2 = a(i) - a(k), b2 = b(i) - b(k), r2 = kl(i) - kl(k);
        const double det = a1 * b2 - a2 * b1;
        if (std::abs(det) < 1e-14) continue;
        const double ld = (r1 * b2 - r2 * b1) / det;
        const double lb = (a1 * r2 - a2 * r1) / det;
        try_point(ld, lb);
      }
  return best;
}

}  // namespace detail

/// Conditional mutual information I(x; y | h) in nats for a given input
/// distribution on the grid.
inline double conditional_mi(const RVec& probs, const CdProblem& prob) {
  prob.validate();
  require(probs.size() == prob.x_grid.size(), "conditional_mi: size mismatch");
  check_contract(std::abs(probs.sum() - 1.0) <= 1e-9 && probs.minCoeff() >= -1e-12,
                 "conditional_mi: probs not on the simplex");
  const detail::CdEvaluator eval(prob);
  const RVec kl = eval.kl_scores(probs);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs(i) > 0.0) acc += probs(i) * kl(i);
  return std::max(acc, 0.0);
}

struct CdSolution {
  RVec probs;
  double rate_nats = 0.0;
  double avg_distortion = 0.0;
  double avg_power = 0.0;
  double lambda_d = 0.0;
  double lambda_b = 0.0;
  int iterations = 0;
  bool converged = false;
  double certified_gap = std::numeric_limits<double>::infinity();  // dual bound - rate
  std::vector<double> objective_trace;  // nats, nondecreasing
};

/// Lagrangian Blahut-Arimoto: multiplicative updates with the distortion and
/// power multipliers found by nested bisection, stopped on a dual-gap
/// certificate.
inline CdSolution ba_solve(const CdProblem& prob, double tol = 1e-7, int max_iter = 3000) {
  prob.validate();
  const Eigen::Index n = prob.x_grid.size();
  RVec cost(n), power(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cost(i) = sensing_cost(prob.x_grid(i));
    power(i) = prob.x_grid(i) * prob.x_grid(i);
  }

  // Feasibility: the minimum average distortion under the power budget mixes
  // the two grid powers straddling B (cost is convex decreasing in x^2).
  double d_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (power(i) <= prob.power_budget) d_min = std::min(d_min, cost(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (power(i) >= prob.power_budget || power(j) <= prob.power_budget) continue;
      const double t = (power(j) - prob.power_budget) / (power(j) - power(i));
      d_min = std::min(d_min, t * cost(i) + (1.0 - t) * cost(j));
    }
  }
  if (prob.distortion_cap < d_min - 1e-12)
    throw InfeasibleError("ba_solve: distortion cap below the grid minimum " +
                          std::to_string(d_min));

  const detail::CdEvaluator eval(prob);
  double mult_d = 0.0, mult_b = 0.0;

  auto probs_for = [&](const RVec& score, double ld, double lb) {
    RVec x = score - ld * cost - lb * power;
    const double mx = x.maxCoeff();
    RVec p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = std::exp(x(i) - mx);
    p /= p.sum();
    return p;
  };
  // Inner: power multiplier (>= 0, complementary slack).
  auto solve_lb = [&](const RVec& score, double ld) {
    auto pw = [&](double lb) { return probs_for(score, ld, lb).dot(power); };
    if (pw(0.0) <= prob.power_budget) return 0.0;
    double hi = 1.0;
    for (int e = 0; e < 200 && pw(hi) > prob.power_budget; ++e) hi *= 2.0;
    double lo = 0.0, lb = 0.0;
    for (int it = 0; it < 200; ++it) {
      lb = 0.5 * (lo + hi);
      const double v = pw(lb);
      if (std::abs(v - prob.power_budget) <= 1e-13 * prob.power_budget) break;
      (v > prob.power_budget ? lo : hi) = lb;
    }
    return lb;
  };
  // Outer: distortion multiplier (>= 0, complementary slack).
  auto p_step = [&](const RVec& score) {
    double ld = 0.0;
    double lb = solve_lb(score, ld);
    RVec p = probs_for(score, ld, lb);
    if (p.dot(cost) > prob.distortion_cap + 1e-12) {
      double hi = 1.0;
      for (int e = 0; e < 200; ++e) {
        const double lbh = solve_lb(score, hi);
        if (probs_for(score, hi, lbh).dot(cost) <= prob.distortion_cap) break;
        hi *= 2.0;
      }
      double lo = 0.0;
      for (int it = 0; it < 200; ++it) {
        ld = 0.5 * (lo + hi);
        lb = solve_lb(score, ld);
        const double v = probs_for(score, ld, lb).dot(cost);
        if (std::abs(v - prob.distortion_cap) <= 1e-13) break;
        (v > prob.distortion_cap ? lo : hi) = ld;
      }
      p = probs_for(score, ld, lb);
    }
    mult_d = ld;
    mult_b = lb;
    return p;
  };

  CdSolution sol;
  RVec p = RVec::Constant(n, 1.0 / static_cast<double>(n));
  if (p.dot(cost) > prob.distortion_cap + 1e-12 ||
      p.dot(power) > prob.power_budget + 1e-12)
    p = p_step(RVec::Zero(n));

  // Overrelaxed multiplicative updates (exponent scaled by theta) with an
  // ascent safeguard: an overshoot rolls back to the last iterate and a plain
  // step. This keeps the nondecreasing-objective contract while cutting the
  // slow tail equilibration of plain Blahut-Arimoto by an order of magnitude.
  double theta = 1.0;
  RVec prev_p = p;
  double prev_obj = -std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    RVec kl = eval.kl_scores(p);
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (p(i) > 0.0) obj += p(i) * kl(i);
    if (obj < prev_obj - 1e-14) {
      p = prev_p;
      theta = 1.0;
      kl = eval.kl_scores(p);
      obj = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (p(i) > 0.0) obj += p(i) * kl(i);
    }
    sol.objective_trace.push_back(obj);
    RVec score(n);
    for (Eigen::Index i = 0; i < n; ++i)
      score(i) = theta * kl(i) + std::log(std::max(p(i), 1e-18));
    prev_p = p;
    prev_obj = obj;
    p = p_step(score);
    // Certified stopping: exact dual minimization of the single-letter
    // capacity upper bound over both multipliers (checked periodically, it
    // costs about as much as one kl sweep).
    if (it % 5 == 4 || it == 0) {
      RVec ca(n), cb(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        ca(i) = cost(i) - prob.distortion_cap;
        cb(i) = power(i) - prob.power_budget;
      }
      const double ub = detail::dual_bound(kl, ca, cb);
      sol.certified_gap = std::min(sol.certified_gap, ub - obj);
      if (ub - obj <= tol) {
        sol.converged = true;
        ++it;
        break;
      }
    }
    theta = std::min(theta * 1.25, 16.0);
  }

  // Exact symmetrization (the problem is even in x; averaging the mirror
  // image cannot decrease the objective and removes bisection asymmetry).
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const double avg = 0.5 * (p(i) + p(n - 1 - i));
    p(i) = avg;
    p(n - 1 - i) = avg;
  }
  sol.probs = p;
  sol.rate_nats = conditional_mi(p, prob);
  sol.avg_distortion = p.dot(cost);
  sol.avg_power = p.dot(power);
  sol.lambda_d = mult_d;
  sol.lambda_b = mult_b;
  sol.iterations = it;
  return sol;
}

struct CdCurvePoint {
  double distortion_cap = 0.0;
  double rate_nats = 0.0;
  double avg_distortion = 0.0;
  double avg_power = 0.0;
  RVec probs;
};

/// Capacity-distortion curve over an ascending list of distortion caps.
inline std::vector<CdCurvePoint> cd_curve(const CdProblem& base,
                                          const std::vector<double>& d_list,
                                          double tol = 1e-7, int max_iter = 3000) {
  require(!d_list.empty(), "cd_curve: empty distortion list");
  require(std::is_sorted(d_list.begin(), d_list.end()), "cd_curve: d list must ascend");
  std::vector<CdCurvePoint> out;
  for (const double d : d_list) {
    CdProblem p = base;
    p.distortion_cap = d;
    const auto sol = ba_solve(p, tol, max_iter);
    CdCurvePoint pt;
    pt.distortion_cap = d;
    pt.rate_nats = sol.rate_nats;
    pt.avg_distortion = sol.avg_distortion;
    pt.avg_power = sol.avg_power;
    pt.probs = sol.probs;
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace isacsim::cdtheory
