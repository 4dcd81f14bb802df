// Discrete periodic auto-correlation of oversampled baseband signals, and the
// closed-form expectation of the squared coherently-integrated ACF with its
// iceberg (squared mean) / sea-level (variance) decomposition.
//
// Derivation used throughout: with X = F_N U s, the ACF of the shaped signal
// is R_k = sum_n |X_n|^2 c_{k,n} where c_{k,n} = e^{j2pi nk/LN} *
// sum_a G[n + aN] e^{j2pi ak/L} and G is the LN-grid squared spectrum of the
// taps. Taking moments of |X_n|^2 under a zero-mean, zero-pseudo-variance,
// unit-power alphabet with kurtosis kappa gives, per lag,
//   E|R~_k|^2 = |sum_n c_n|^2 + (1/M) [ ||c||^2 + (kappa-2) ||V^T c||^2 ],
// with V the bistochastic matrix of the basis. This alias-sum form is exact
// for any pulse; for band-limited Nyquist pulses it reduces to the usual
// two-band expression in terms of g and the per-lag phase.
#pragma once

#include <string>
#include <thread>
#include <vector>

#include "isacsim/constellation.hpp"
#include "isacsim/fft.hpp"
#include "isacsim/modulation.hpp"
#include "isacsim/pulse.hpp"

namespace isacsim::acf {

struct BasebandSignal {
  CVec samples;  // length L*N
  std::string basis_kind;
  std::string constellation_label;
  uint64_t seed = 0;
};

/// Shapes symbols through the basis, zero-stuffs by L, and applies the pulse
/// as a cyclic interpolation filter.
inline BasebandSignal shape_signal(const CVec& symbols, const modulation::ModulationBasis& basis,
                                   const pulse::Pulse& p) {
  require(symbols.size() == basis.n(), "shape_signal: symbol count != basis dimension");
  require(p.n == symbols.size(), "shape_signal: pulse n != symbol count");
  const Eigen::Index n = symbols.size(), l = p.l, ln = l * n;
  const CVec x = basis.matrix * symbols;
  CVec up = CVec::Zero(ln);
  for (Eigen::Index i = 0; i < n; ++i) up(i * l) = x(i);
  BasebandSignal out;
  out.samples = fft::circular_convolve(p.taps, up);
  out.basis_kind = modulation::kind_name(basis.kind);
  return out;
}

/// Periodic ACF over all LN cyclic lags, R_k = sum_t x*_t x_{t+k}, via the
/// power spectrum. R_0 = ||x||^2 exactly (up to roundoff).
inline CVec periodic_acf(const CVec& x) {
  const Eigen::Index ln = x.size();
  const CVec spec = fft::forward(x);
  CVec power(ln);
  for (Eigen::Index i = 0; i < ln; ++i) power(i) = std::norm(spec(i));
  return fft::inverse(power) * std::sqrt(static_cast<double>(ln));
}

inline CVec periodic_acf(const BasebandSignal& x) { return periodic_acf(x.samples); }

/// (1/M) sum of the per-signal ACFs.
inline CVec coherent_integrated_acf(const std::vector<BasebandSignal>& signals) {
  require(!signals.empty(), "coherent_integrated_acf: empty signal list");
  CVec acc = periodic_acf(signals.front());
  for (std::size_t i = 1; i < signals.size(); ++i) {
    const auto& s = signals[i];
    require(s.samples.size() == acc.size(), "coherent_integrated_acf: length mismatch");
    acc += periodic_acf(s);
  }
  return acc / static_cast<double>(signals.size());
}

/// E|R~_0|^2 = N^2 + (kappa - 1) N / M, for any basis and Nyquist pulse.
inline double mainlobe_level(Eigen::Index n, double kappa, Eigen::Index m) {
  require(n >= 1 && m >= 1 && kappa >= 1.0, "mainlobe_level: bad arguments");
  return static_cast<double>(n) * static_cast<double>(n) +
         (kappa - 1.0) * static_cast<double>(n) / static_cast<double>(m);
}

struct AcfStats {
  RVec iceberg;  // squared mean per lag
  RVec sea;      // variance per lag
  RVec total;    // iceberg + sea
  Eigen::Index m = 1;

  /// dB relative to the N^2 mainlobe, matching the usual plot normalization.
  RVec total_db(Eigen::Index n) const {
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    RVec out(total.size());
    for (Eigen::Index i = 0; i < total.size(); ++i) out(i) = db10(total(i) / n2);
    return out;
  }
};

/// Closed-form expected squared ACF after M-fold coherent integration.
/// Requires a moment-validated constellation and a Nyquist pulse; both
/// assumptions enter the derivation.
inline AcfStats expected_squared_acf(const modulation::ModulationBasis& basis,
                                     const constellation::Constellation& c,
                                     const pulse::Pulse& p, Eigen::Index m) {
  require(m >= 1, "expected_squared_acf: m must be >= 1");
  require(basis.n() == p.n, "expected_squared_acf: basis/pulse dimension mismatch");
  const auto mom = c.moments(1e-9);
  check_contract(mom.all_ok(),
                 "expected_squared_acf: constellation violates the zero-mean / "
                 "zero-pseudo-variance / unit-power constraints");
  const auto nyq = pulse::nyquist_check(p, 1e-3);
  check_contract(nyq.pass, "expected_squared_acf: pulse is not Nyquist within 1e-3");

  const Eigen::Index n = p.n, l = p.l, ln = l * n;
  const double kappa = mom.kurtosis;
  const RMat v = modulation::bistochastic_v(basis).entries;
  const RVec g_full = pulse::detail::full_squared_spectrum(p.taps, n);

  AcfStats st;
  st.m = m;
  st.iceberg.resize(ln);
  st.sea.resize(ln);
  st.total.resize(ln);
  CVec cvec(n), vtc(n);
  for (Eigen::Index k = 0; k < ln; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      cxd alias{0.0, 0.0};
      for (Eigen::Index a = 0; a < l; ++a) {
        const double ang = 2.0 * kPi * static_cast<double>(a) * static_cast<double>(k) /
                           static_cast<double>(l);
        alias += g_full(i + a * n) * cxd{std::cos(ang), std::sin(ang)};
      }
      const double phi = 2.0 * kPi * static_cast<double>(i) * static_cast<double>(k) /
                         static_cast<double>(ln);
      cvec(i) = alias * cxd{std::cos(phi), std::sin(phi)};
    }
    vtc.noalias() = v.transpose().cast<cxd>() * cvec;
    const double iceberg = std::norm(cvec.sum());
    const double sea =
        (cvec.squaredNorm() + (kappa - 2.0) * vtc.squaredNorm()) / static_cast<double>(m);
    st.iceberg(k) = iceberg;
    st.sea(k) = std::max(sea, 0.0);
    st.total(k) = iceberg + st.sea(k);
  }
  return st;
}

struct McAcfResult {
  RVec mean;     // Monte Carlo estimate of E|R~_k|^2 per lag
  RVec ci_half;  // half-width of the per-lag 99% normal CI
  Eigen::Index trials = 0;
};

/// Monte Carlo estimate of the expected squared coherently-integrated ACF.
/// Per-trial streams are derived from (seed, trial, signal index), and the
/// reduction runs in fixed trial order, so the result is bit-identical for a
/// given seed regardless of `threads`.
inline McAcfResult mc_expected_squared_acf(const modulation::ModulationBasis& basis,
                                           const constellation::Constellation& c,
                                           const pulse::Pulse& p, Eigen::Index m,
                                           Eigen::Index trials, uint64_t seed,
                                           int threads = 1) {
  require(trials >= 100, "mc_expected_squared_acf: need at least 100 trials");
  require(m >= 1, "mc_expected_squared_acf: m must be >= 1");
  const Eigen::Index ln = p.grid();
  RMat per_trial(trials, ln);

  auto run_range = [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index t = lo; t < hi; ++t) {
      CVec rbar = CVec::Zero(ln);
      for (Eigen::Index j = 0; j < m; ++j) {
        const CVec s = c.sample(p.n, seed, static_cast<uint64_t>(t) * static_cast<uint64_t>(m) +
                                               static_cast<uint64_t>(j));
        rbar += periodic_acf(shape_signal(s, basis, p));
      }
      rbar /= static_cast<double>(m);
      for (Eigen::Index k = 0; k < ln; ++k) per_trial(t, k) = std::norm(rbar(k));
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (trials + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const Eigen::Index lo = w * chunk, hi = std::min<Eigen::Index>(trials, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  McAcfResult res;
  res.trials = trials;
  res.mean = RVec::Zero(ln);
  res.ci_half = RVec::Zero(ln);
  for (Eigen::Index t = 0; t < trials; ++t) res.mean += per_trial.row(t).transpose();
  res.mean /= static_cast<double>(trials);
  for (Eigen::Index t = 0; t < trials; ++t) {
    const RVec d = per_trial.row(t).transpose() - res.mean;
    res.ci_half += d.cwiseProduct(d);
  }
  constexpr double z99 = 2.5758293035489004;
  for (Eigen::Index k = 0; k < ln; ++k) {
    const double var = res.ci_half(k) / static_cast<double>(trials - 1);
    res.ci_half(k) = z99 * std::sqrt(var / static_cast<double>(trials));
  }
  return res;
}

}  // namespace isacsim::acf
