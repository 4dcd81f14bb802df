// Probabilistic constellation shaping: maximize per-subcarrier AWGN mutual
// information over the transmit probabilities of a fixed alphabet, subject to
// a kurtosis cap and the zero-mean / zero-pseudo-variance / unit-power moment
// constraints, via an alternating Blahut-Arimoto scheme.
//
// The alphabet is partitioned into orbits under 90-degree rotation and the
// distribution is kept uniform inside each orbit. That enforces E s = 0 and
// E s^2 = 0 exactly (the objective and remaining constraints are rotation
// invariant, so this loses no optimality) and leaves the power equality and
// kurtosis cap, handled by Lagrange multipliers with nested bisection.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/numerics.hpp"

namespace isacsim::pcs {

/// Thrown when the quadrature fails its resolution self-check.
class GridError : public std::runtime_error {
 public:
  explicit GridError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Gauss-Hermite rule for weight e^{-x^2} via Golub-Welsch.
struct GhQuadrature {
  RVec nodes;
  RVec weights;

  static GhQuadrature make(int order) {
    require(order >= 2, "GhQuadrature: order must be >= 2");
    RMat jac = RMat::Zero(order, order);
    for (int i = 1; i < order; ++i) {
      const double b = std::sqrt(static_cast<double>(i) / 2.0);
      jac(i, i - 1) = b;
      jac(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(jac);
    GhQuadrature q;
    q.nodes = es.eigenvalues();
    q.weights.resize(order);
    const double sqrt_pi = std::sqrt(kPi);
    for (int i = 0; i < order; ++i) {
      const double v0 = es.eigenvectors()(0, i);
      q.weights(i) = sqrt_pi * v0 * v0;
    }
    return q;
  }
};

namespace detail {

struct Orbits {
  std::vector<std::vector<Eigen::Index>> members;  // alphabet indices per orbit
  RVec e2;  // |s|^2 per orbit
  RVec e4;  // |s|^4 per orbit
};

inline Orbits build_orbits(const CVec& alphabet) {
  const Eigen::Index m = alphabet.size();
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  Orbits orb;
  std::vector<double> e2v, e4v;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    std::vector<Eigen::Index> group;
    cxd cur = alphabet(i);
    for (int rot = 0; rot < 4; ++rot) {
      for (Eigen::Index k = 0; k < m; ++k) {
        if (!used[static_cast<std::size_t>(k)] && std::abs(alphabet(k) - cur) < 1e-9) {
          used[static_cast<std::size_t>(k)] = true;
          group.push_back(k);
          break;
        }
      }
      cur *= kJ;
    }
    check_contract(group.size() == 4 || group.size() == 1,
                   "pcs: alphabet is not closed under 90-degree rotation");
    // A size-1 "orbit" would be the origin, which breaks unit modulus anyway.
    orb.members.push_back(group);
    const double p2 = std::norm(alphabet(i));
    e2v.push_back(p2);
    e4v.push_back(p2 * p2);
  }
  orb.e2 = Eigen::Map<RVec>(e2v.data(), static_cast<Eigen::Index>(e2v.size()));
  orb.e4 = Eigen::Map<RVec>(e4v.data(), static_cast<Eigen::Index>(e4v.size()));
  return orb;
}

// Expands orbit-class probabilities to the full alphabet.
inline RVec expand(const Orbits& orb, const RVec& class_probs, Eigen::Index m) {
  RVec p = RVec::Zero(m);
  for (std::size_t c = 0; c < orb.members.size(); ++c)
    for (const Eigen::Index idx : orb.members[c])
      p(idx) = class_probs(static_cast<Eigen::Index>(c)) /
               static_cast<double>(orb.members[c].size());
  return p;
}

// E_{y|s_m}[ ln p(y|s_m) / p(y) ] and the posterior-log expectations, all on
// Gauss-Hermite nodes centered at each alphabet point.
class MiEvaluator {
 public:
  MiEvaluator(const CVec& alphabet, double snr, int gh_order)
      : alphabet_(alphabet), sigma_(std::sqrt(1.0 / snr)), gh_(GhQuadrature::make(gh_order)) {}

  /// I(y;s) in nats for the given full-alphabet distribution.
  double mi(const RVec& probs) const {
    const Eigen::Index m = alphabet_.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (probs(i) <= 0.0) continue;
      acc += probs(i) * conditional_term(probs, i);
    }
    return std::max(acc, 0.0);
  }

  /// KL_i = E_{y|s_i}[ ln p(y|s_i) - ln p(y) ] under the mixture of `probs`.
  /// I(probs) = sum_i probs_i KL_i, and max_i KL_i upper-bounds the capacity
  /// for the output distribution induced by `probs`.
  RVec kl_scores(const RVec& probs) const {
    const Eigen::Index m = alphabet_.size();
    RVec d(m);
    for (Eigen::Index i = 0; i < m; ++i) d(i) = conditional_term(probs, i);
    return d;
  }

  double sigma() const { return sigma_; }

 private:
  // ln p(y|s_i) - ln p(y) integrated over y | s_i.
  double conditional_term(const RVec& probs, Eigen::Index i) const {
    return expect_over_nodes(i, [&](double ll_self, double ll_mix) {
      return ll_self - ll_mix;
    }, probs);
  }

  template <typename F>
  double expect_over_nodes(Eigen::Index i, F&& f, const RVec& probs) const {
    const Eigen::Index m = alphabet_.size();
    const int order = static_cast<int>(gh_.nodes.size());
    const double inv_s2 = 1.0 / (sigma_ * sigma_);
    double acc = 0.0;
    for (int a = 0; a < order; ++a) {
      for (int b = 0; b < order; ++b) {
        const cxd y = alphabet_(i) + sigma_ * cxd{gh_.nodes(a), gh_.nodes(b)};
        // Log-likelihoods up to a common constant.
        double max_ll = -std::numeric_limits<double>::infinity();
        lls_.resize(static_cast<std::size_t>(m));
        for (Eigen::Index k = 0; k < m; ++k) {
          lls_[static_cast<std::size_t>(k)] = -std::norm(y - alphabet_(k)) * inv_s2;
          if (probs(k) > 0.0)
            max_ll = std::max(max_ll, lls_[static_cast<std::size_t>(k)]);
        }
        double mix = 0.0;
        for (Eigen::Index k = 0; k < m; ++k)
          if (probs(k) > 0.0)
            mix += probs(k) * std::exp(lls_[static_cast<std::size_t>(k)] - max_ll);
        const double ll_mix = max_ll + std::log(mix);
        const double ll_self = lls_[static_cast<std::size_t>(i)];
        acc += gh_.weights(a) * gh_.weights(b) * f(ll_self, ll_mix);
      }
    }
    return acc / kPi;
  }

  CVec alphabet_;
  double sigma_;
  GhQuadrature gh_;
  mutable std::vector<double> lls_;
};

}  // namespace detail

/// Mutual information of a discrete-input complex AWGN channel in bits per
/// symbol, by Gauss-Hermite product quadrature centered on each point.
/// Self-checks the grid: with a uniform input at extreme SNR the result must
/// reach log2(M) within 0.01 bit.
inline double awgn_mi(const RVec& probs, const CVec& alphabet, double snr,
                      int gh_order = 16) {
  require(probs.size() == alphabet.size() && probs.size() >= 2, "awgn_mi: bad sizes");
  check_contract(std::abs(probs.sum() - 1.0) <= 1e-9 && probs.minCoeff() >= -1e-12,
                 "awgn_mi: probs not on the simplex");
  const double log2m = std::log2(static_cast<double>(alphabet.size()));
  const detail::MiEvaluator check(alphabet, 1e9, gh_order);
  const RVec uniform = RVec::Constant(alphabet.size(), 1.0 / static_cast<double>(alphabet.size()));
  if (std::abs(check.mi(uniform) / std::numbers::ln2 - log2m) > 0.01)
    throw GridError("awgn_mi: quadrature too coarse for this alphabet");
  const detail::MiEvaluator eval(alphabet, snr, gh_order);
  return eval.mi(probs) / std::numbers::ln2;
}

struct PcsProblem {
  CVec alphabet;
  double c0 = 2.0;   // kurtosis cap
  double snr = 10.0; // linear Es/N0
  int gh_order = 16;
};

struct PcsSolution {
  RVec probs;                 // full-alphabet distribution
  double mi_bits = 0.0;
  double kurtosis_achieved = 0.0;
  int iterations = 0;
  bool converged = false;
  bool clamped = false;               // c0 was below the minimum feasible kurtosis
  std::vector<double> objective_trace;  // nats, nondecreasing
};

/// Minimum kurtosis achievable on the alphabet under unit power and orbit
/// symmetry: the lower convex envelope over (|s|^2, |s|^4) pairs at power 1.
inline double min_feasible_kurtosis(const CVec& alphabet) {
  const auto orb = detail::build_orbits(alphabet);
  const Eigen::Index nc = orb.e2.size();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < nc; ++i) {
    if (std::abs(orb.e2(i) - 1.0) <= 1e-12) best = std::min(best, orb.e4(i));
    for (Eigen::Index j = 0; j < nc; ++j) {
      if (orb.e2(i) >= 1.0 || orb.e2(j) <= 1.0) continue;
      const double t = (orb.e2(j) - 1.0) / (orb.e2(j) - orb.e2(i));
      best = std::min(best, t * orb.e4(i) + (1.0 - t) * orb.e4(j));
    }
  }
  check_contract(std::isfinite(best),
                 "min_feasible_kurtosis: alphabet cannot meet unit power");
  return best;
}

/// Modified Blahut-Arimoto solve of the shaping problem. When c0 lies below
/// the minimum feasible kurtosis the cap is clamped to that minimum and the
/// solution is flagged `clamped`.
inline PcsSolution mba_solve(const PcsProblem& prob, double tol = 1e-7, int max_iter = 5000,
                             const RVec* warm_start = nullptr) {
  require(prob.c0 >= 1.0, "mba_solve: c0 must be >= 1");
  require(prob.snr > 0.0, "mba_solve: snr must be positive");
  const Eigen::Index m = prob.alphabet.size();
  const auto orb = detail::build_orbits(prob.alphabet);
  const Eigen::Index nc = static_cast<Eigen::Index>(orb.members.size());

  PcsSolution sol;
  const double kappa_min = min_feasible_kurtosis(prob.alphabet);
  double cap = prob.c0;
  if (cap < kappa_min) {
    cap = kappa_min + 1e-9;
    sol.clamped = true;
  }

  detail::MiEvaluator eval(prob.alphabet, prob.snr, prob.gh_order);

  // Class sizes and initial class distribution.
  RVec sizes(nc);
  for (Eigen::Index c = 0; c < nc; ++c)
    sizes(c) = static_cast<double>(orb.members[c].size());
  RVec cp = sizes / sizes.sum();
  if (warm_start != nullptr && warm_start->size() == m) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (const Eigen::Index idx : orb.members[c]) acc += (*warm_start)(idx);
      cp(c) = std::max(acc, 1e-12);
    }
    cp /= cp.sum();
  }

  // p-step: class probs proportional to sizes * exp(score - a e4 - b e2),
  // with b solving the unit-power equality and a >= 0 the kurtosis cap.
  double mult_a = 0.0, mult_b = 0.0;  // multipliers of the last p-step
  auto class_probs_for = [&](const RVec& score, double a, double b) {
    RVec x = score - a * orb.e4 - b * orb.e2;
    const double mx = x.maxCoeff();
    RVec p(nc);
    for (Eigen::Index c = 0; c < nc; ++c) p(c) = sizes(c) * std::exp(x(c) - mx);
    p /= p.sum();
    return p;
  };
  auto solve_power = [&](const RVec& score, double a) {
    // Power is monotone decreasing in b; expand a bracket then bisect.
    double lo = -1.0, hi = 1.0;
    auto power = [&](double b) { return class_probs_for(score, a, b).dot(orb.e2); };
    for (int e = 0; e < 200 && power(lo) < 1.0; ++e) lo *= 2.0;
    for (int e = 0; e < 200 && power(hi) > 1.0; ++e) hi *= 2.0;
    double b = 0.0;
    for (int it = 0; it < 200; ++it) {
      b = 0.5 * (lo + hi);
      const double pw = power(b);
      if (std::abs(pw - 1.0) <= 1e-14) break;
      (pw > 1.0 ? lo : hi) = b;
    }
    return b;
  };
  auto p_step = [&](const RVec& score) {
    double a = 0.0;
    double b = solve_power(score, a);
    RVec p = class_probs_for(score, a, b);
    if (p.dot(orb.e4) > cap + 1e-12) {  // cap active: bisect its multiplier
      double a_hi = 1.0;
      for (int e = 0; e < 200; ++e) {
        const double bh = solve_power(score, a_hi);
        if (class_probs_for(score, a_hi, bh).dot(orb.e4) <= cap) break;
        a_hi *= 2.0;
      }
      double a_lo = 0.0;
      for (int it2 = 0; it2 < 200; ++it2) {
        a = 0.5 * (a_lo + a_hi);
        b = solve_power(score, a);
        const double k = class_probs_for(score, a, b).dot(orb.e4);
        if (std::abs(k - cap) <= 1e-13) break;
        (k > cap ? a_lo : a_hi) = a;
      }
      p = class_probs_for(score, a, b);
    }
    mult_a = a;
    mult_b = b;
    return p;
  };

  // Feasible starting point: uniform (or the warm start) may violate the
  // cap; replace it with the max-entropy feasible distribution so the
  // objective trace is nondecreasing from the first iterate.
  if (cp.dot(orb.e4) > cap + 1e-12) cp = p_step(RVec::Zero(nc));

  int it = 0;
  for (; it < max_iter; ++it) {
    const RVec full = detail::expand(orb, cp, m);
    const RVec kl = eval.kl_scores(full);
    RVec kl_class(nc);
    for (Eigen::Index c = 0; c < nc; ++c) {
      double acc = 0.0;
      for (const Eigen::Index idx : orb.members[c]) acc += kl(idx);
      kl_class(c) = acc / sizes(c);
    }
    const double obj = cp.dot(kl_class);
    sol.objective_trace.push_back(obj);
    // The p-step maximizer of F(p, q_t) is p ∝ exp(E[ln q_t(s|y) | s]); the
    // current prior sits inside the posterior, making this the classic
    // multiplicative update.
    RVec score(nc);
    for (Eigen::Index c = 0; c < nc; ++c)
      score(c) = kl_class(c) + std::log(std::max(cp(c) / sizes(c), 1e-18));
    cp = p_step(score);
    // Dual bound on the constrained optimum for the current output mixture
    // (Lagrangian form of the single-letter capacity upper bound); stop when
    // the certified gap closes.
    double ub = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < nc; ++c)
      ub = std::max(ub, kl_class(c) - mult_a * (orb.e4(c) - cap) -
                            mult_b * (orb.e2(c) - 1.0));
    if (ub - obj <= tol) {
      sol.converged = true;
      ++it;
      break;
    }
  }

  sol.probs = detail::expand(orb, cp, m);
  sol.mi_bits = eval.mi(sol.probs) / std::numbers::ln2;
  sol.kurtosis_achieved = cp.dot(orb.e4);
  sol.iterations = it;
  return sol;
}

struct TradeoffPoint {
  double c0 = 0.0;
  double mi_bits = 0.0;
  double kurtosis = 0.0;
  Eigen::Index support_size = 0;
  RVec probs;
};

/// Sweeps the kurtosis cap (ascending), warm-starting each solve from the
/// previous solution.
inline std::vector<TradeoffPoint> sweep_tradeoff(const PcsProblem& base,
                                                 const std::vector<double>& c0_list,
                                                 double tol = 1e-7, int max_iter = 5000) {
  require(!c0_list.empty(), "sweep_tradeoff: empty c0 list");
  require(std::is_sorted(c0_list.begin(), c0_list.end()),
          "sweep_tradeoff: c0 list must be ascending");
  std::vector<TradeoffPoint> out;
  const RVec* warm = nullptr;
  RVec warm_store;
  for (const double c0 : c0_list) {
    PcsProblem p = base;
    p.c0 = c0;
    const auto sol = mba_solve(p, tol, max_iter, warm);
    TradeoffPoint tp;
    tp.c0 = c0;
    tp.mi_bits = sol.mi_bits;
    tp.kurtosis = sol.kurtosis_achieved;
    tp.probs = sol.probs;
    tp.support_size = (sol.probs.array() > 1e-6).count();
    out.push_back(std::move(tp));
    warm_store = out.back().probs;
    warm = &warm_store;
  }
  return out;
}

}  // namespace isacsim::pcs
