// MIMO precoding under random Gaussian signaling: LMMSE channel estimation,
// conditional and ergodic MMSE, the deterministic water-filling precoder, the
// per-realization data-dependent precoder (modified water-filling), the
// SGD-based data-independent precoder, and penalty-AO ISAC precoding with a
// rate floor.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/numerics.hpp"
#include "isacsim/rng.hpp"

namespace isacsim::mimo {

struct MimoScenario {
  Eigen::Index n_t = 0, n_s = 0, n_c = 0, n = 0;
  CMat r_h;          // n_t x n_t Hermitian PSD, E[H_s^H H_s]
  CMat h_c;          // n_c x n_t
  double sigma_s = 1.0, sigma_c = 1.0;
  double p_t = 1.0;

  void validate() const {
    require(n_t >= 1 && n_s >= 1 && n >= 1, "MimoScenario: bad dimensions");
    require(r_h.rows() == n_t && r_h.cols() == n_t, "MimoScenario: R_H shape");
    const double scale = std::max(1.0, r_h.cwiseAbs().maxCoeff());
    check_contract((r_h - r_h.adjoint()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
                   "MimoScenario: R_H not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(r_h, Eigen::EigenvaluesOnly);
    check_contract(es.eigenvalues().minCoeff() >= -1e-9 * scale,
                   "MimoScenario: R_H not PSD");
    require(p_t > 0.0 && sigma_s > 0.0 && sigma_c > 0.0, "MimoScenario: bad scalars");
    if (h_c.size() > 0) require(h_c.rows() == n_c && h_c.cols() == n_t,
                                "MimoScenario: H_c shape");
  }

  /// Exponential-correlation sensing prior and i.i.d. CN(0,1) communication
  /// channel; the library-standard figure scenario.
  static MimoScenario make(Eigen::Index nt, Eigen::Index ns, Eigen::Index nc,
                           Eigen::Index n_snap, double corr, double pt, double sig_s,
                           double sig_c, uint64_t seed) {
    MimoScenario sc;
    sc.n_t = nt;
    sc.n_s = ns;
    sc.n_c = nc;
    sc.n = n_snap;
    sc.r_h.resize(nt, nt);
    for (Eigen::Index i = 0; i < nt; ++i)
      for (Eigen::Index j = 0; j < nt; ++j)
        sc.r_h(i, j) = std::pow(corr, std::abs(static_cast<double>(i - j)));
    Rng rng(seed, 0);
    sc.h_c.resize(nc, nt);
    for (Eigen::Index i = 0; i < nc; ++i)
      for (Eigen::Index j = 0; j < nt; ++j) sc.h_c(i, j) = rng.cnormal();
    sc.sigma_s = sig_s;
    sc.sigma_c = sig_c;
    sc.p_t = pt;
    sc.validate();
    return sc;
  }
};

enum class PrecoderKind { wf, ddp, dip, isac_ddp, isac_dip, isac_det };

inline const char* kind_name(PrecoderKind k) {
  switch (k) {
    case PrecoderKind::wf: return "wf";
    case PrecoderKind::ddp: return "ddp";
    case PrecoderKind::dip: return "dip";
    case PrecoderKind::isac_ddp: return "isac_ddp";
    case PrecoderKind::isac_dip: return "isac_dip";
    default: return "isac_det";
  }
}

struct Precoder {
  CMat w;
  PrecoderKind kind = PrecoderKind::wf;
  std::vector<double> objective_trace;
  bool diverged = false;
  double penalty_residual = 0.0;  // ||Omega - W W^H||_F / ||Omega||_F for ISAC modes
};

/// i.i.d. CN(0,1) payload matrix of size n_t x n.
inline CMat sample_payload(const MimoScenario& sc, uint64_t seed, uint64_t stream) {
  Rng rng(seed, stream);
  CMat s(sc.n_t, sc.n);
  for (Eigen::Index i = 0; i < sc.n_t; ++i)
    for (Eigen::Index j = 0; j < sc.n; ++j) s(i, j) = rng.cnormal();
  return s;
}

/// LMMSE estimate of the sensing channel from Y = H X + Z.
inline CMat lmmse_estimate(const CMat& y, const CMat& x, const MimoScenario& sc) {
  require(y.rows() == sc.n_s && y.cols() == sc.n, "lmmse_estimate: Y shape");
  require(x.rows() == sc.n_t && x.cols() == sc.n, "lmmse_estimate: X shape");
  const double reg = sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s);
  const CMat inner = x.adjoint() * sc.r_h * x +
                     reg * CMat::Identity(sc.n, sc.n);
  return y * inner.ldlt().solve(x.adjoint() * sc.r_h);
}

/// MSE of the LMMSE estimator for a fixed signal realization, in the
/// inverse-free form Tr(R) - Tr[R A (A^H R A + s^2 N_s I)^{-1} A^H R],
/// A = W S. Valid for singular R as well; algebraically equal to
/// Tr[(R^{-1} + A A^H / (s^2 N_s))^{-1}] when R is invertible.
inline double conditional_mmse(const CMat& w, const CMat& s, const MimoScenario& sc) {
  require(w.rows() == sc.n_t && w.cols() == sc.n_t, "conditional_mmse: W shape");
  require(s.rows() == sc.n_t && s.cols() == sc.n, "conditional_mmse: S shape");
  const double reg = sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s);
  const CMat a = w * s;
  const CMat ra = sc.r_h * a;
  const CMat inner = a.adjoint() * ra + reg * CMat::Identity(sc.n, sc.n);
  const CMat sol = inner.ldlt().solve(ra.adjoint());
  return std::real(sc.r_h.trace()) - std::real((ra * sol).trace());
}

struct McEstimate {
  double mean = 0.0;
  double ci_half = 0.0;  // 99% normal CI
  Eigen::Index trials = 0;
};

/// Monte Carlo ergodic LMMSE over i.i.d. Gaussian payloads. Deterministic for
/// a fixed seed; common seeds give paired samples across precoders.
inline McEstimate elmmse_mc(const CMat& w, const MimoScenario& sc, Eigen::Index trials,
                            uint64_t seed) {
  require(trials >= 2, "elmmse_mc: need at least 2 trials");
  RVec vals(trials);
  for (Eigen::Index t = 0; t < trials; ++t)
    vals(t) = conditional_mmse(w, sample_payload(sc, seed, static_cast<uint64_t>(t)), sc);
  McEstimate est;
  est.trials = trials;
  est.mean = vals.mean();
  const double var = (vals.array() - est.mean).square().sum() / static_cast<double>(trials - 1);
  est.ci_half = 2.5758293035489004 * std::sqrt(var / static_cast<double>(trials));
  return est;
}

/// Deterministic-training LMMSE objective Tr[(R^{-1} + N/(s^2 N_s) W W^H)^{-1}]
/// evaluated in the same inverse-free form (S S^H replaced by N I).
inline double deterministic_lmmse(const CMat& w, const MimoScenario& sc) {
  const double reg = sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s) /
                     static_cast<double>(sc.n);
  const CMat ra = sc.r_h * w;
  const CMat inner = w.adjoint() * ra + reg * CMat::Identity(sc.n_t, sc.n_t);
  const CMat sol = inner.ldlt().solve(ra.adjoint());
  return std::real(sc.r_h.trace()) - std::real((ra * sol).trace());
}

/// Water-filling precoder for deterministic orthogonal training,
/// W = sqrt(s^2 N_s / N) Q max(mu I - Lambda^{-1}, 0)^{1/2}.
inline Precoder wf_precoder(const MimoScenario& sc) {
  sc.validate();
  const auto eig = numerics::hermitian_eig(sc.r_h);
  check_contract(eig.values.maxCoeff() > 0.0, "wf_precoder: R_H is zero");
  const double scale = sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s) /
                       static_cast<double>(sc.n);
  const double target = sc.p_t / scale;
  auto filled = [&](double mu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
      if (eig.values(i) > 1e-14) acc += std::max(mu - 1.0 / eig.values(i), 0.0);
    return acc;
  };
  double hi = 1.0 / std::max(eig.values.minCoeff(), 1e-14) + target;
  const double mu = numerics::bisect_water_level(filled, target, 0.0, hi, 1e-10 * target);
  RVec gains(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    gains(i) = eig.values(i) > 1e-14
                   ? std::sqrt(scale * std::max(mu - 1.0 / eig.values(i), 0.0))
                   : 0.0;
  Precoder p;
  p.kind = PrecoderKind::wf;
  p.w = eig.vectors * gains.asDiagonal().toDenseMatrix().cast<cxd>();
  return p;
}

/// Per-realization optimal precoder (modified water-filling): align the
/// strongest prior eigendirections of R_H with the strongest data directions
/// of S and water-fill across the paired modes. KKT form per active mode:
/// lambda_i^{-1} + c d_i^2 P_i = mu sqrt(c) d_i with c = 1/(s^2 N_s).
inline Precoder ddp_precoder(const CMat& s, const MimoScenario& sc) {
  sc.validate();
  require(s.rows() == sc.n_t && s.cols() == sc.n, "ddp_precoder: S shape");
  const auto eig = numerics::hermitian_eig(sc.r_h);
  const auto svd = numerics::complex_svd(s);
  const double c = 1.0 / (sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s));
  const Eigen::Index nt = sc.n_t;
  const Eigen::Index rank = std::min<Eigen::Index>(svd.singular_values.size(), nt);

  // Power per paired mode as a function of the water level.
  auto mode_power = [&](double mu, Eigen::Index i) {
    if (i >= rank) return 0.0;
    const double d = svd.singular_values(i);
    const double lam = eig.values(i);
    if (d <= 1e-12 || lam <= 1e-14) return 0.0;
    return std::max(mu / (std::sqrt(c) * d) - 1.0 / (lam * c * d * d), 0.0);
  };
  auto filled = [&](double mu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nt; ++i) acc += mode_power(mu, i);
    return acc;
  };
  double hi = 1.0;
  while (filled(hi) < sc.p_t) hi *= 2.0;
  const double mu = numerics::bisect_water_level(filled, sc.p_t, 0.0, hi, 1e-10 * sc.p_t);
  RVec gains = RVec::Zero(nt);
  for (Eigen::Index i = 0; i < nt; ++i) gains(i) = std::sqrt(mode_power(mu, i));

  Precoder p;
  p.kind = PrecoderKind::ddp;
  p.w = eig.vectors * gains.asDiagonal().toDenseMatrix().cast<cxd>() * svd.u.adjoint();
  return p;
}

/// Gradient of conditional_mmse with respect to conj(W):
/// -(1/(s^2 N_s)) (R^{-1} + (1/(s^2 N_s)) W S S^H W^H)^{-2} W S S^H.
/// Requires invertible R_H.
inline CMat grad_conditional_mmse(const CMat& w, const CMat& s, const MimoScenario& sc) {
  const double c = 1.0 / (sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s));
  const CMat k = s * s.adjoint();
  const CMat m = sc.r_h.inverse() + c * w * k * w.adjoint();
  const CMat minv = m.ldlt().solve(CMat::Identity(sc.n_t, sc.n_t));
  return -c * minv * minv * w * k;
}

struct SgdConfig {
  Eigen::Index batch = 8;
  double step0 = 0.0;       // 0 -> default 0.1 * p_t
  double step_decay = 200.0;  // eps_r = step0 / (1 + r / step_decay)
  double momentum = 0.9;
  int iters = 2000;
  uint64_t seed = 1;
  int eval_every = 50;
  Eigen::Index eval_trials = 512;
};

namespace detail {

inline CMat project_ball(const CMat& w, double p_t) {
  const double n2 = w.squaredNorm();
  if (n2 <= p_t) return w;
  return w * std::sqrt(p_t / n2);
}

}  // namespace detail

/// Data-independent precoder by projected SGD with momentum on the ergodic
/// MMSE, warm-started from the water-filling solution. Returns the best
/// iterate under a fixed Monte Carlo evaluation set.
inline Precoder dip_precoder(const MimoScenario& sc, const SgdConfig& cfg = {}) {
  sc.validate();
  require(cfg.batch >= 1 && cfg.iters >= 1, "dip_precoder: bad config");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, "dip_precoder: bad momentum");
  const double step0 = cfg.step0 > 0.0 ? cfg.step0 : 0.1 * sc.p_t;

  Precoder p;
  p.kind = PrecoderKind::dip;
  CMat w = wf_precoder(sc).w;
  CMat best_w = w;
  auto eval = [&](const CMat& cand) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < cfg.eval_trials; ++t)
      acc += conditional_mmse(
          cand, sample_payload(sc, cfg.seed ^ 0x9e3779b97f4a7c15ull, static_cast<uint64_t>(t)),
          sc);
    return acc / static_cast<double>(cfg.eval_trials);
  };
  double best_obj = eval(w);
  const double initial_obj = best_obj;
  p.objective_trace.push_back(best_obj);

  CMat velocity = CMat::Zero(sc.n_t, sc.n_t);
  for (int r = 0; r < cfg.iters; ++r) {
    CMat g = CMat::Zero(sc.n_t, sc.n_t);
    for (Eigen::Index b = 0; b < cfg.batch; ++b) {
      const CMat s = sample_payload(
          sc, cfg.seed, static_cast<uint64_t>(r) * static_cast<uint64_t>(cfg.batch) +
                            static_cast<uint64_t>(b));
      g += grad_conditional_mmse(w, s, sc);
    }
    g /= static_cast<double>(cfg.batch);
    const double eps = step0 / (1.0 + static_cast<double>(r) / cfg.step_decay);
    velocity = cfg.momentum * velocity + g;
    w = detail::project_ball(w - eps * velocity, sc.p_t);
    if ((r + 1) % cfg.eval_every == 0 || r + 1 == cfg.iters) {
      const double obj = eval(w);
      p.objective_trace.push_back(obj);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
      }
      if (obj > 10.0 * initial_obj) {  // divergence detector
        p.diverged = true;
        break;
      }
    }
  }
  p.w = best_w;
  return p;
}

/// Achievable communication rate log2 det(I + H_c W W^H H_c^H / s_c^2).
inline double rate_bps(const CMat& w, const MimoScenario& sc) {
  require(sc.h_c.size() > 0, "rate_bps: scenario has no communication channel");
  const CMat hw = sc.h_c * w;
  const CMat gram = CMat::Identity(sc.n_c, sc.n_c) +
                    hw * hw.adjoint() / (sc.sigma_c * sc.sigma_c);
  Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    acc += std::log2(std::max(es.eigenvalues()(i), 1e-300));
  return acc;
}

/// Capacity of the communication channel at the power budget (water-filling
/// over the H_c^H H_c eigenmodes); the feasibility ceiling for rate floors.
inline double max_rate(const MimoScenario& sc) {
  const auto eig = numerics::hermitian_eig(sc.h_c.adjoint() * sc.h_c);
  const double s2 = sc.sigma_c * sc.sigma_c;
  auto filled = [&](double mu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
      if (eig.values(i) > 1e-12) acc += std::max(mu - s2 / eig.values(i), 0.0);
    return acc;
  };
  double hi = 1.0;
  while (filled(hi) < sc.p_t) hi *= 2.0;
  const double mu = numerics::bisect_water_level(filled, sc.p_t, 0.0, hi, 1e-12 * sc.p_t);
  double rate = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > 1e-12)
      rate += std::log2(1.0 + std::max(mu - s2 / eig.values(i), 0.0) * eig.values(i) / s2);
  return rate;
}

/// Rate-capacity-achieving precoder (communication water-filling), used as a
/// feasible anchor for tight rate floors.
inline CMat comm_wf_precoder(const MimoScenario& sc) {
  const auto eig = numerics::hermitian_eig(sc.h_c.adjoint() * sc.h_c);
  const double s2 = sc.sigma_c * sc.sigma_c;
  auto filled = [&](double mu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
      if (eig.values(i) > 1e-12) acc += std::max(mu - s2 / eig.values(i), 0.0);
    return acc;
  };
  double hi = 1.0;
  while (filled(hi) < sc.p_t) hi *= 2.0;
  const double mu = numerics::bisect_water_level(filled, sc.p_t, 0.0, hi, 1e-12 * sc.p_t);
  RVec gains = RVec::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > 1e-12)
      gains(i) = std::sqrt(std::max(mu - s2 / eig.values(i), 0.0));
  return eig.vectors * gains.asDiagonal().toDenseMatrix().cast<cxd>();
}

namespace detail {

// Projection onto {Omega >= 0, Tr(Omega) <= p_t} in Frobenius norm:
// eigenvalues are clamped to >= 0 and, if needed, shifted water-filling style
// onto the trace ball.
inline CMat project_psd_trace(const CMat& omega, double p_t) {
  const auto eig = numerics::hermitian_eig(0.5 * (omega + omega.adjoint()));
  RVec v = eig.values.cwiseMax(0.0);
  if (v.sum() > p_t) {
    // Project the eigenvalue vector onto the simplex {v >= 0, sum = p_t}.
    RVec sorted = v;
    std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<double>());
    double acc = 0.0, tau = 0.0;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < sorted.size(); ++i) {
      acc += sorted(i);
      const double cand = (acc - p_t) / static_cast<double>(i + 1);
      if (cand < sorted(i)) {
        tau = cand;
        k = i + 1;
      }
    }
    (void)k;
    v = (v.array() - tau).max(0.0);
  }
  return eig.vectors * v.asDiagonal().toDenseMatrix().cast<cxd>() * eig.vectors.adjoint();
}

// Omega-step: min 1/2 ||Omega - C||_F^2 s.t. logdet(I + Hc Omega Hc^H /s^2)
// >= r0_nats, Omega >= 0, Tr(Omega) <= p_t. Solved as a one-dimensional
// search over the rate multiplier with an inner projected-gradient solve.
struct OmegaStep {
  const MimoScenario& sc;
  double r0_nats;

  double rate_nats(const CMat& omega) const {
    const CMat gram = CMat::Identity(sc.n_c, sc.n_c) +
                      sc.h_c * omega * sc.h_c.adjoint() / (sc.sigma_c * sc.sigma_c);
    Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      acc += std::log(std::max(es.eigenvalues()(i), 1e-300));
    return acc;
  }

  CMat rate_grad(const CMat& omega) const {
    const double s2 = sc.sigma_c * sc.sigma_c;
    const CMat gram = CMat::Identity(sc.n_c, sc.n_c) + sc.h_c * omega * sc.h_c.adjoint() / s2;
    return sc.h_c.adjoint() * gram.ldlt().solve(sc.h_c) / s2;
  }

  CMat solve_fixed_t(const CMat& c, double t, CMat omega0) const {
    CMat omega = project_psd_trace(omega0, sc.p_t);
    double step = 1.0;
    auto phi = [&](const CMat& o) {
      return 0.5 * (o - c).squaredNorm() - t * rate_nats(o);
    };
    double cur = phi(omega);
    for (int it = 0; it < 300; ++it) {
      const CMat grad = (omega - c) - t * rate_grad(omega);
      CMat cand = project_psd_trace(omega - step * grad, sc.p_t);
      double cand_val = phi(cand);
      int bt = 0;
      while (cand_val > cur - 1e-12 && bt < 30) {
        step *= 0.5;
        cand = project_psd_trace(omega - step * grad, sc.p_t);
        cand_val = phi(cand);
        ++bt;
      }
      const double move = (cand - omega).norm();
      omega = cand;
      cur = cand_val;
      step = std::min(step * 1.5, 1e3);
      if (move <= 1e-10 * std::max(1.0, omega.norm())) break;
    }
    return omega;
  }

  CMat solve(const CMat& c) const {
    CMat omega = solve_fixed_t(c, 0.0, c);
    if (rate_nats(omega) >= r0_nats - 1e-12) return omega;
    double t_hi = 1.0;
    CMat o_hi = solve_fixed_t(c, t_hi, omega);
    int guard = 0;
    while (rate_nats(o_hi) < r0_nats && guard++ < 60) {
      t_hi *= 2.0;
      o_hi = solve_fixed_t(c, t_hi, o_hi);
    }
    double t_lo = 0.0;
    CMat best = o_hi;
    for (int it = 0; it < 60; ++it) {
      const double t = 0.5 * (t_lo + t_hi);
      const CMat o = solve_fixed_t(c, t, best);
      if (rate_nats(o) >= r0_nats) {
        t_hi = t;
        best = o;
      } else {
        t_lo = t;
      }
      if (t_hi - t_lo <= 1e-8 * std::max(1.0, t_hi)) break;
    }
    return best;
  }
};

}  // namespace detail

struct IsacConfig {
  double rho0 = 1.0;
  double rho_mult = 5.0;
  int rounds = 8;
  int w_iters = 300;          // W-step gradient iterations per round
  SgdConfig sgd;              // used by the dip mode's W-step
  double coupling_tol = 1e-4; // target ||Omega - WW^H|| / ||Omega||
};

/// Penalty-based alternating optimization for the ISAC precoding problem:
/// minimize the (conditional, ergodic, or deterministic) MMSE subject to a
/// communication rate floor and the power budget. `mode` selects the
/// objective; isac_ddp requires the data realization `s_realization`.
inline Precoder isac_precoder(PrecoderKind mode, const MimoScenario& sc, double r0_bits,
                              const IsacConfig& cfg = {},
                              const CMat* s_realization = nullptr) {
  sc.validate();
  require(mode == PrecoderKind::isac_ddp || mode == PrecoderKind::isac_dip ||
              mode == PrecoderKind::isac_det,
          "isac_precoder: mode must be an ISAC kind");
  require(r0_bits >= 0.0, "isac_precoder: negative rate floor");
  const double ceiling = max_rate(sc);
  if (r0_bits > ceiling + 1e-9)
    throw InfeasibleError("isac_precoder: rate floor " + std::to_string(r0_bits) +
                          " exceeds the channel capacity " + std::to_string(ceiling));
  if (mode == PrecoderKind::isac_ddp)
    require(s_realization != nullptr, "isac_precoder: ddp mode needs a data realization");

  // Sensing-only start for the W variable.
  CMat w;
  switch (mode) {
    case PrecoderKind::isac_ddp: w = ddp_precoder(*s_realization, sc).w; break;
    case PrecoderKind::isac_dip: {
      SgdConfig warm = cfg.sgd;
      warm.iters = std::max(200, cfg.sgd.iters / 4);
      w = dip_precoder(sc, warm).w;
      break;
    }
    default: w = wf_precoder(sc).w; break;
  }

  const double r0_nats = r0_bits * std::numbers::ln2;
  detail::OmegaStep om{sc, r0_nats};

  auto objective_grad = [&](const CMat& cand, int sgd_round) -> CMat {
    if (mode == PrecoderKind::isac_ddp) return grad_conditional_mmse(cand, *s_realization, sc);
    if (mode == PrecoderKind::isac_det) {
      // Deterministic-training objective: S S^H -> N I.
      const double c = static_cast<double>(sc.n) /
                       (sc.sigma_s * sc.sigma_s * static_cast<double>(sc.n_s));
      const CMat m = sc.r_h.inverse() + c * cand * cand.adjoint();
      const CMat minv = m.ldlt().solve(CMat::Identity(sc.n_t, sc.n_t));
      return -c * minv * minv * cand;
    }
    CMat g = CMat::Zero(sc.n_t, sc.n_t);
    for (Eigen::Index b = 0; b < cfg.sgd.batch; ++b) {
      const CMat s = sample_payload(sc, cfg.sgd.seed + 17,
                                    static_cast<uint64_t>(sgd_round) *
                                            static_cast<uint64_t>(cfg.sgd.batch) +
                                        static_cast<uint64_t>(b));
      g += grad_conditional_mmse(cand, s, sc);
    }
    return g / static_cast<double>(cfg.sgd.batch);
  };

  Precoder p;
  p.kind = mode;
  double rho = cfg.rho0;
  CMat omega = om.solve(w * w.adjoint());
  int sgd_round = 0;
  for (int round = 0; round < cfg.rounds; ++round) {
    // W-step: projected (stochastic) gradient on f(W) + rho/2 ||Omega - WW^H||^2.
    const double step0 =
        (cfg.sgd.step0 > 0.0 ? cfg.sgd.step0 : 0.1 * sc.p_t) / (1.0 + rho);
    CMat velocity = CMat::Zero(sc.n_t, sc.n_t);
    for (int it = 0; it < cfg.w_iters; ++it) {
      const CMat g_pen = -rho * ((omega - w * w.adjoint()) * w);
      const CMat g = objective_grad(w, sgd_round++) + g_pen;
      const double eps = step0 / (1.0 + static_cast<double>(it) / cfg.sgd.step_decay);
      velocity = cfg.sgd.momentum * velocity + g;
      w = detail::project_ball(w - eps * velocity, sc.p_t);
    }
    // Omega-step: rate-feasible matrix nearest to WW^H.
    omega = om.solve(w * w.adjoint());
    p.penalty_residual = (omega - w * w.adjoint()).norm() / std::max(omega.norm(), 1e-30);
    p.objective_trace.push_back(p.penalty_residual);
    if (p.penalty_residual <= cfg.coupling_tol) break;
    rho *= cfg.rho_mult;
  }

  // The rate constraint lives on Omega; if the coupling left W short of the
  // floor, fall back to the Procrustes-aligned factor of Omega, which
  // satisfies both the rate floor and the power budget exactly.
  if (sc.h_c.size() > 0 && rate_bps(w, sc) < r0_bits - 1e-3) {
    const auto eig = numerics::hermitian_eig(omega);
    CMat root = eig.vectors *
                eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal().toDenseMatrix().cast<cxd>() *
                eig.vectors.adjoint();
    // Align the factor with the current W (orthogonal Procrustes).
    const auto svd = numerics::complex_svd(root.adjoint() * w);
    w = root * (svd.u * svd.v.adjoint());
    w = detail::project_ball(w, sc.p_t);
  }
  p.w = w;
  return p;
}

}  // namespace isacsim::mimo
