// Desk-scale ranging simulation: multi-target echo synthesis on the cyclic
// grid, matched-filter range profiles, coherent integration, cell-averaging
// CFAR detection, range estimation, and the OFDM communication receive chain.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <vector>

#include "isacsim/acf.hpp"

namespace isacsim::ranging {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

inline double range_to_delay(double range_m) { return 2.0 * range_m / kSpeedOfLight; }
inline double delay_to_range(double delay_s) { return 0.5 * delay_s * kSpeedOfLight; }

struct Target {
  double delay_s = 0.0;
  cxd amplitude{1.0, 0.0};
};

struct Scene {
  std::vector<Target> targets;
  double noise_sigma = 0.0;      // per-sample complex noise std deviation
  double sample_interval = 1.0;  // T_s in seconds

  Eigen::Index lag_of(const Target& t) const {
    return static_cast<Eigen::Index>(std::llround(t.delay_s / sample_interval));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["noise_sigma"] = noise_sigma;
    j["sample_interval"] = sample_interval;
    auto& ts = j["targets"] = nlohmann::json::array();
    for (const auto& t : targets)
      ts.push_back({{"delay_s", t.delay_s},
                    {"amplitude", {t.amplitude.real(), t.amplitude.imag()}}});
    return j;
  }

  static Scene from_json(const nlohmann::json& j) {
    Scene s;
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.sample_interval = j.at("sample_interval").get<double>();
    for (const auto& t : j.at("targets")) {
      Target tg;
      tg.delay_s = t.at("delay_s").get<double>();
      const auto& a = t.at("amplitude");
      tg.amplitude = cxd{a.at(0).get<double>(), a.at(1).get<double>()};
      s.targets.push_back(tg);
    }
    return s;
  }
};

/// Superimposes cyclically delayed copies of the transmit signal plus complex
/// white Gaussian noise. Target delays are quantized to the sample grid; the
/// cyclic-prefix model keeps every shift circular.
inline CVec synthesize_echo(const acf::BasebandSignal& x, const Scene& scene, uint64_t seed,
                            uint64_t stream = 0) {
  require(scene.noise_sigma >= 0.0, "synthesize_echo: negative noise sigma");
  const Eigen::Index ln = x.samples.size();
  CVec y = CVec::Zero(ln);
  for (const auto& t : scene.targets) {
    const Eigen::Index lag = scene.lag_of(t);
    require(t.delay_s >= 0.0 && lag >= 0 && lag < ln,
            "synthesize_echo: target delay outside the cyclic-prefix window");
    for (Eigen::Index i = 0; i < ln; ++i)
      y((i + lag) % ln) += t.amplitude * x.samples(i);
  }
  if (scene.noise_sigma > 0.0) {
    Rng rng(seed, stream);
    const double s = scene.noise_sigma;
    for (Eigen::Index i = 0; i < ln; ++i) y(i) += s * rng.cnormal();
  }
  return y;
}

struct RangeProfile {
  CVec values;               // cross-correlation over all LN cyclic lags
  double grid_spacing = 1.0; // seconds per lag

  double range_of(Eigen::Index lag) const {
    return delay_to_range(static_cast<double>(lag) * grid_spacing);
  }
};

/// Correlates the echo against the known transmit signal over all cyclic
/// lags; exactly linear in y.
inline RangeProfile matched_filter_profile(const CVec& y, const acf::BasebandSignal& x,
                                           double grid_spacing = 1.0) {
  require(y.size() == x.samples.size(), "matched_filter_profile: length mismatch");
  const Eigen::Index ln = y.size();
  const CVec xs = fft::forward(x.samples);
  const CVec ys = fft::forward(y);
  CVec prod(ln);
  for (Eigen::Index i = 0; i < ln; ++i) prod(i) = std::conj(xs(i)) * ys(i);
  RangeProfile p;
  p.values = fft::inverse(prod) * std::sqrt(static_cast<double>(ln));
  p.grid_spacing = grid_spacing;
  return p;
}

/// Elementwise mean of profiles on a common grid.
inline RangeProfile integrate_profiles(const std::vector<RangeProfile>& profiles) {
  require(!profiles.empty(), "integrate_profiles: empty list");
  RangeProfile out = profiles.front();
  for (std::size_t i = 1; i < profiles.size(); ++i) {
    require(profiles[i].values.size() == out.values.size() &&
                profiles[i].grid_spacing == out.grid_spacing,
            "integrate_profiles: grid mismatch");
    out.values += profiles[i].values;
  }
  out.values /= static_cast<double>(profiles.size());
  return out;
}

struct DetectionResult {
  std::vector<Eigen::Index> lags;
  RVec threshold;              // per-cell threshold trace
  std::vector<double> delays;  // seconds
};

/// Cell-averaging CFAR over |profile|^2 with cyclic training windows.
/// Threshold = alpha * mean(2*train cells), alpha = 2*train*(pfa^{-1/(2*train)}-1),
/// which is exact for independent exponential cells. Detections must also be
/// local maxima of the power profile.
inline DetectionResult cfar_detect(const RangeProfile& profile, double pfa,
                                   Eigen::Index guard, Eigen::Index train) {
  require(pfa > 0.0 && pfa < 1.0, "cfar_detect: pfa must be in (0,1)");
  require(train >= 1 && guard >= 0, "cfar_detect: bad window");
  const Eigen::Index n = profile.values.size();
  require(2 * (guard + train) + 1 <= n, "cfar_detect: window exceeds grid");
  RVec power(n);
  for (Eigen::Index i = 0; i < n; ++i) power(i) = std::norm(profile.values(i));

  const double t2 = 2.0 * static_cast<double>(train);
  const double alpha = t2 * (std::pow(pfa, -1.0 / t2) - 1.0);

  DetectionResult det;
  det.threshold.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index d = guard + 1; d <= guard + train; ++d) {
      acc += power((i + d) % n);
      acc += power((i - d + n) % n);
    }
    det.threshold(i) = alpha * acc / t2;
    const bool local_max =
        power(i) > power((i + 1) % n) && power(i) > power((i - 1 + n) % n);
    if (power(i) > det.threshold(i) && local_max) {
      det.lags.push_back(i);
      det.delays.push_back(static_cast<double>(i) * profile.grid_spacing);
    }
  }
  return det;
}

struct RangeEstimate {
  std::vector<double> ranges_m;  // descending peak power order
  bool complete = true;          // false when fewer than q local maxima exist
  double rmse_m = 0.0;           // filled when truth is supplied
};

/// Picks the q strongest local maxima of |profile|^2 inside the lag region
/// [region_lo, region_hi] and maps them to ranges. With ground truth given,
/// computes RMSE under greedy nearest-match pairing; unmatched truth entries
/// are penalized at half the region width.
inline RangeEstimate estimate_ranges(const RangeProfile& profile, Eigen::Index q,
                                     Eigen::Index region_lo, Eigen::Index region_hi,
                                     const std::vector<double>* truth_ranges_m = nullptr) {
  require(q >= 1, "estimate_ranges: q must be >= 1");
  const Eigen::Index n = profile.values.size();
  require(region_lo >= 0 && region_hi < n && region_lo <= region_hi,
          "estimate_ranges: bad region");
  std::vector<std::pair<double, Eigen::Index>> peaks;
  for (Eigen::Index i = region_lo; i <= region_hi; ++i) {
    const double p = std::norm(profile.values(i));
    const double l = std::norm(profile.values((i - 1 + n) % n));
    const double r = std::norm(profile.values((i + 1) % n));
    if (p > l && p > r) peaks.emplace_back(p, i);
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  RangeEstimate est;
  est.complete = static_cast<Eigen::Index>(peaks.size()) >= q;
  const Eigen::Index keep = std::min<Eigen::Index>(q, static_cast<Eigen::Index>(peaks.size()));
  for (Eigen::Index i = 0; i < keep; ++i)
    est.ranges_m.push_back(profile.range_of(peaks[static_cast<std::size_t>(i)].second));

  if (truth_ranges_m != nullptr) {
    const double penalty =
        0.5 * (profile.range_of(region_hi) - profile.range_of(region_lo));
    std::vector<double> est_left = est.ranges_m, truth_left = *truth_ranges_m;
    double sq = 0.0;
    std::size_t terms = 0;
    while (!est_left.empty() && !truth_left.empty()) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < est_left.size(); ++i)
        for (std::size_t j = 0; j < truth_left.size(); ++j) {
          const double d = std::abs(est_left[i] - truth_left[j]);
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      sq += best * best;
      ++terms;
      est_left.erase(est_left.begin() + static_cast<std::ptrdiff_t>(bi));
      truth_left.erase(truth_left.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    for (std::size_t j = 0; j < truth_left.size(); ++j) {
      sq += penalty * penalty;
      ++terms;
    }
    est.rmse_m = terms > 0 ? std::sqrt(sq / static_cast<double>(terms)) : 0.0;
  }
  return est;
}

struct CommRxResult {
  CVec symbol_estimates;
  double ser = 0.0;
  Eigen::Index erasures = 0;  // dead subcarriers excluded from the SER
};

/// One-tap per-subcarrier equalization for OFDM-like bases (F_N U diagonal):
/// s_hat = (F y) / (sqrt(N) (F h) .* diag(F U)), then minimum-distance
/// demapping against the constellation.
inline CommRxResult ofdm_comm_rx(const CVec& y, const CVec& channel_taps,
                                 const CVec& symbols_truth,
                                 const modulation::ModulationBasis& basis,
                                 const constellation::Constellation& c) {
  const Eigen::Index n = basis.n();
  require(y.size() == n && symbols_truth.size() == n, "ofdm_comm_rx: length mismatch");
  require(channel_taps.size() <= n, "ofdm_comm_rx: channel longer than the CP window");
  // Per-subcarrier gains of the basis: F_N U must be diagonal (plain OFDM or
  // OFDM with subcarrier phases). F U columns come out of the forward FFT.
  CVec basis_diag(n);
  if (basis.kind == modulation::Kind::ofdm) {
    basis_diag.setOnes();
  } else {
    double offdiag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const CVec col = fft::forward(basis.matrix.col(j));
      basis_diag(j) = col(j);
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) offdiag = std::max(offdiag, std::abs(col(i)));
    }
    require(offdiag <= 1e-9,
            "ofdm_comm_rx: basis is not OFDM-like (F_N U must be diagonal)");
  }

  CVec h = CVec::Zero(n);
  h.head(channel_taps.size()) = channel_taps;
  const CVec hf = fft::forward(h) * std::sqrt(static_cast<double>(n));
  const CVec yf = fft::forward(y);

  CommRxResult res;
  res.symbol_estimates = CVec::Zero(n);
  Eigen::Index errors = 0, counted = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const cxd gain = hf(k) * basis_diag(k);
    if (std::abs(gain) < 1e-12) {
      ++res.erasures;
      continue;
    }
    const cxd est = yf(k) / gain;
    res.symbol_estimates(k) = est;
    // Minimum-distance demap for estimate and truth.
    Eigen::Index best = 0, truth_best = 0;
    double bd = std::numeric_limits<double>::infinity();
    double td = std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      const double de = std::norm(est - c.points()(m));
      if (de < bd) {
        bd = de;
        best = m;
      }
      const double dt = std::norm(symbols_truth(k) - c.points()(m));
      if (dt < td) {
        td = dt;
        truth_best = m;
      }
    }
    ++counted;
    if (best != truth_best) ++errors;
  }
  res.ser = counted > 0 ? static_cast<double>(errors) / static_cast<double>(counted) : 0.0;
  return res;
}

}  // namespace isacsim::ranging
