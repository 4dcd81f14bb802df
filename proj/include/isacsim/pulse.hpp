// Nyquist pulses on the cyclic oversampled grid: RRC construction, squared
// spectra, the folded-spectrum check, and convex spectrum-design programs.
//
// Spectrum index convention (recorded once here, used everywhere): the
// length-N vector `g` holds squared-spectrum samples over the [-1/T, 0) band
// in ascending frequency, so g starts in the stopband (zeros at low indices)
// and rises monotonically to the passband (ones at high indices). The first
// N natural-order samples of the squared spectrum are then 1 - g by the
// folded-spectrum criterion. Lag-domain quantities never depend on this
// orientation; tests validate against ACF shape.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/fft.hpp"
#include "isacsim/modulation.hpp"
#include "isacsim/numerics.hpp"

namespace isacsim::pulse {

struct Pulse {
  CVec taps;     // length l*n, unit energy
  RVec g;        // length n, squared-spectrum samples (convention above)
  double alpha = 0.0;
  Eigen::Index l = 0;
  Eigen::Index n = 0;

  Eigen::Index grid() const { return l * n; }

  void check_invariants() const {
    check_contract(std::abs(taps.squaredNorm() - 1.0) <= 1e-9, "Pulse: taps not unit energy");
    check_contract(g.size() == n && taps.size() == l * n, "Pulse: size mismatch");
    check_contract(g.minCoeff() >= -1e-9 && g.maxCoeff() <= 1.0 + 1e-9,
                   "Pulse: g outside [0,1]");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["alpha"] = alpha;
    j["l"] = l;
    j["n"] = n;
    auto& t = j["taps"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < taps.size(); ++i)
      t.push_back({taps(i).real(), taps(i).imag()});
    return j;
  }
};

namespace detail {

/// Full squared spectrum on the LN grid: N |F_{LN} taps|^2. Sums to N for
/// unit-energy taps.
inline RVec full_squared_spectrum(const CVec& taps, Eigen::Index n) {
  const CVec spec = fft::forward(taps);
  return static_cast<double>(n) * spec.cwiseAbs2();
}

/// Extracts the design-orientation g from the full-grid spectrum.
inline RVec design_g_from_full(const RVec& full, Eigen::Index l, Eigen::Index n) {
  RVec g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = full((l - 1) * n + i);
  return g.cwiseMax(0.0).cwiseMin(1.0);
}

/// Continuous raised-cosine (= squared RRC) spectrum, frequency in 1/T units.
inline double raised_cosine_spectrum(double f, double alpha) {
  const double af = std::abs(f);
  const double lo = 0.5 * (1.0 - alpha), hi = 0.5 * (1.0 + alpha);
  if (alpha == 0.0 && af == 0.5) return 0.5;  // half power at the exact edge
  if (af <= lo) return 1.0;
  if (af >= hi) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi / alpha * (af - lo)));
}

}  // namespace detail

/// First N samples of the squared spectrum in the design orientation (see the
/// header comment); equals the stored `g` up to numerical residue.
inline RVec squared_spectrum(const Pulse& p) {
  return detail::design_g_from_full(detail::full_squared_spectrum(p.taps, p.n), p.l, p.n);
}

struct NyquistReport {
  double max_isi = 0.0;         // |periodic ACF of taps| at nonzero symbol lags
  double max_folded_dev = 0.0;  // folded-spectrum deviation from 1
  bool pass = false;
};

/// Verifies the zero-ISI property both in time (taps ACF at multiples of L)
/// and in frequency (folded squared spectrum constant).
inline NyquistReport nyquist_check(const Pulse& p, double tol = 1e-3) {
  NyquistReport rep;
  const CVec spec = fft::forward(p.taps);
  const Eigen::Index ln = p.grid();
  // Periodic ACF of the taps via the spectrum.
  CVec power(ln);
  for (Eigen::Index i = 0; i < ln; ++i) power(i) = std::norm(spec(i));
  const CVec acf = fft::inverse(power) * std::sqrt(static_cast<double>(ln));
  const double r0 = std::abs(acf(0));
  for (Eigen::Index m = 1; m < p.n; ++m)
    rep.max_isi = std::max(rep.max_isi, std::abs(acf(m * p.l)) / std::max(r0, 1e-30));
  const RVec full = detail::full_squared_spectrum(p.taps, p.n);
  for (Eigen::Index i = 0; i < p.n; ++i) {
    double fold = 0.0;
    for (Eigen::Index a = 0; a < p.l; ++a) fold += full(i + a * p.n);
    rep.max_folded_dev = std::max(rep.max_folded_dev, std::abs(fold - 1.0));
  }
  rep.pass = rep.max_isi <= tol && rep.max_folded_dev <= tol;
  return rep;
}

/// Root-raised-cosine pulse on the cyclic grid, unit energy. Constructed by
/// sampling the RRC amplitude spectrum on the LN-point grid and inverting;
/// for L >= 2 the band fits inside the grid, which makes this identical to
/// cyclically wrapping the T/L-sampled impulse response.
inline Pulse rrc_taps(double alpha, Eigen::Index l, Eigen::Index n) {
  require(alpha >= 0.0 && alpha <= 1.0, "rrc_taps: alpha outside [0,1]");
  require(l >= 2, "rrc_taps: oversampling factor must be >= 2, pulse effects are "
                  "invisible at symbol-rate sampling");
  require(n >= 2, "rrc_taps: n must be >= 2");
  const Eigen::Index ln = l * n;
  CVec amplitude(ln);
  for (Eigen::Index b = 0; b < ln; ++b) {
    const Eigen::Index signed_bin = b < ln / 2 ? b : b - ln;
    const double f = static_cast<double>(signed_bin) / static_cast<double>(n);
    amplitude(b) = std::sqrt(detail::raised_cosine_spectrum(f, alpha));
  }
  CVec taps = fft::inverse(amplitude);
  taps /= taps.norm();
  Pulse p;
  p.taps = std::move(taps);
  p.alpha = alpha;
  p.l = l;
  p.n = n;
  p.g = detail::design_g_from_full(detail::full_squared_spectrum(p.taps, n), l, n);
  p.check_invariants();
  return p;
}

/// The per-lag aliased spectrum vector g + (1 - g) e^{-j 2 pi k / L}.
inline CVec gk_vector(const RVec& g, Eigen::Index k, Eigen::Index l) {
  require(g.minCoeff() >= -1e-12 && g.maxCoeff() <= 1.0 + 1e-12,
          "gk_vector: g outside [0,1]");
  const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(l);
  const cxd phase{std::cos(ang), std::sin(ang)};
  CVec out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) out(i) = g(i) + (1.0 - g(i)) * phase;
  return out;
}

/// Zero-phase taps realizing a given squared-spectrum vector. The LN-grid
/// spectrum is g on the [-1/T, 0) band and 1-g on [0, 1/T), i.e. the
/// folded-spectrum complement; the amplitude is the nonnegative real root,
/// the free spectral phase the ACF cannot see.
inline Pulse taps_from_spectrum(const RVec& g, Eigen::Index l) {
  require(l >= 2, "taps_from_spectrum: oversampling factor must be >= 2");
  const Eigen::Index n = g.size();
  require(n >= 2, "taps_from_spectrum: g too short");
  if (g.minCoeff() < 0.0 || g.maxCoeff() > 1.0 + 1e-12)
    throw InvalidArgument("taps_from_spectrum: g entries must lie in [0,1]");
  const Eigen::Index ln = l * n;
  CVec amplitude = CVec::Zero(ln);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    amplitude(i) = scale * std::sqrt(std::max(1.0 - g(i), 0.0));
    amplitude((l - 1) * n + i) = scale * std::sqrt(std::max(g(i), 0.0));
  }
  Pulse p;
  p.taps = fft::inverse(amplitude);
  p.taps /= p.taps.norm();
  p.l = l;
  p.n = n;
  p.g = g;
  // Effective roll-off: fraction of entries strictly inside (0, 1).
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (g(i) > 1e-12 && g(i) < 1.0 - 1e-12) ++inside;
  p.alpha = static_cast<double>(inside) / static_cast<double>(n);
  p.check_invariants();
  return p;
}

// ---------------------------------------------------------------------------
// Pulse design: convex programs over the squared spectrum.
// ---------------------------------------------------------------------------

enum class DesignObjective { sum, max, full_expected };

struct PulseDesignSpec {
  double alpha = 0.35;
  Eigen::Index n = 128;
  Eigen::Index l = 10;
  std::vector<Eigen::Index> sidelobe_region;  // lags in [1, l*n - 1]
  DesignObjective objective = DesignObjective::sum;
  // full_expected parameters:
  RMat bistochastic;     // V of the modulation basis (N x N); identity = OFDM
  double kurtosis = 1.32;
  Eigen::Index coherent_m = 1;
};

namespace detail {

/// Roll-off band width in bins. Integer alpha*n must make n - alpha*n even
/// (tested contract); non-integer alpha*n is accommodated by rounding to the
/// nearest even width.
inline Eigen::Index rolloff_width(double alpha, Eigen::Index n) {
  const double exact = alpha * static_cast<double>(n);
  const auto nearest = static_cast<Eigen::Index>(std::llround(exact));
  if (std::abs(exact - static_cast<double>(nearest)) < 1e-9) {
    if ((n - nearest) % 2 != 0)
      throw InvalidArgument("design_pulse: n - alpha*n must be even");
    return nearest;
  }
  Eigen::Index lo = (nearest / 2) * 2;
  Eigen::Index hi = lo + 2;
  Eigen::Index w = (exact - static_cast<double>(lo) <= static_cast<double>(hi) - exact) ? lo : hi;
  return std::clamp<Eigen::Index>(w, 0, n - (n % 2));
}

/// Pool-adjacent-violators for a nondecreasing fit; with uniform [0,1] bounds
/// the exact bounded-isotonic projection is clip(pava(y)).
inline RVec isotonic_box_projection(const RVec& y) {
  const Eigen::Index n = y.size();
  std::vector<double> value;
  std::vector<Eigen::Index> count;
  value.reserve(n);
  count.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    value.push_back(y(i));
    count.push_back(1);
    while (value.size() >= 2 && value[value.size() - 2] > value.back()) {
      const double merged = (value[value.size() - 2] * count[count.size() - 2] +
                             value.back() * count.back()) /
                            static_cast<double>(count[count.size() - 2] + count.back());
      count[count.size() - 2] += count.back();
      value[value.size() - 2] = merged;
      value.pop_back();
      count.pop_back();
    }
  }
  RVec out(n);
  Eigen::Index pos = 0;
  for (std::size_t b = 0; b < value.size(); ++b) {
    const double v = std::clamp(value[b], 0.0, 1.0);
    for (Eigen::Index r = 0; r < count[b]; ++r) out(pos++) = v;
  }
  return out;
}

/// Dykstra projection onto {nondecreasing, in [0,1]^n, sum = target}.
inline RVec design_feasible_projection(const RVec& y, double target_sum,
                                       double tol = 1e-12, int max_sweeps = 500) {
  RVec x = y;
  RVec corr_iso = RVec::Zero(y.size()), corr_sum = RVec::Zero(y.size());
  const double inv_n = 1.0 / static_cast<double>(y.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const RVec prev = x;
    RVec z = x + corr_iso;
    RVec px = isotonic_box_projection(z);
    corr_iso = z - px;
    z = px + corr_sum;
    px = z.array() + (target_sum - z.sum()) * inv_n;
    corr_sum = z - px;
    x = std::move(px);
    if ((x - prev).norm() <= tol) break;
  }
  return x;
}

// Per-lag affine form of sqrt(N) f~_{k+1}^H g~_k as offset + row * g_free,
// with the fixed 0/1 entries folded into the offset.
struct LagAffine {
  cxd offset;
  CVec row;  // over free indices
};

struct DesignGeometry {
  Eigen::Index n = 0, l = 0, na = 0;
  Eigen::Index free_begin = 0;  // first free index; free set is [begin, begin+na)
  RVec fixed_g;                 // full-length g with free entries zeroed
};

inline DesignGeometry make_geometry(const PulseDesignSpec& spec) {
  DesignGeometry geo;
  geo.n = spec.n;
  geo.l = spec.l;
  geo.na = rolloff_width(spec.alpha, spec.n);
  geo.free_begin = (spec.n - geo.na) / 2;
  geo.fixed_g = RVec::Zero(spec.n);
  for (Eigen::Index i = geo.free_begin + geo.na; i < spec.n; ++i) geo.fixed_g(i) = 1.0;
  return geo;
}

inline RVec assemble_full_g(const DesignGeometry& geo, const RVec& free) {
  RVec g = geo.fixed_g;
  g.segment(geo.free_begin, geo.na) = free;
  return g;
}

inline LagAffine lag_affine(const DesignGeometry& geo, Eigen::Index k) {
  const Eigen::Index n = geo.n;
  const double base = 2.0 * kPi * static_cast<double>(k) /
                      (static_cast<double>(geo.l) * static_cast<double>(n));
  const double ang_l = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(geo.l);
  const cxd phase_l{std::cos(ang_l), std::sin(ang_l)};
  LagAffine la;
  la.offset = cxd{0.0, 0.0};
  la.row = CVec::Zero(geo.na);
  for (Eigen::Index m = 0; m < n; ++m) {
    const cxd e{std::cos(base * static_cast<double>(m)), -std::sin(base * static_cast<double>(m))};
    const bool is_free = m >= geo.free_begin && m < geo.free_begin + geo.na;
    const double gf = geo.fixed_g(m);
    // term: e * [g_m + (1 - g_m) phase_l] = e*phase_l + g_m * e * (1 - phase_l)
    la.offset += e * phase_l;
    if (is_free)
      la.row(m - geo.free_begin) = e * (1.0 - phase_l);
    else
      la.offset += gf * e * (1.0 - phase_l);
  }
  return la;
}

}  // namespace detail

struct DesignReport {
  double objective = 0.0;
  double stat_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Squared-spectrum sidelobe level of a pulse summed over a lag region
/// (iceberg part only; N^2-scaled pulse-ACF units matching design_pulse's
/// sum objective).
inline double iceberg_region_sum(const Pulse& p, const std::vector<Eigen::Index>& lags) {
  const CVec spec = fft::forward(p.taps);
  CVec power(spec.size());
  for (Eigen::Index i = 0; i < spec.size(); ++i) power(i) = std::norm(spec(i));
  const CVec acf = fft::inverse(power) * std::sqrt(static_cast<double>(spec.size()));
  const double n2 = static_cast<double>(p.n) * static_cast<double>(p.n);
  double sum = 0.0;
  for (const Eigen::Index k : lags) sum += n2 * std::norm(acf(k));
  return sum;
}

/// Convex spectrum design over the feasible set {fixed 0/1 bands, monotone
/// roll-off, sum = N/2, box}. Objectives: region sum of the pulse-ACF
/// sidelobes, their maximum (via log-sum-exp smoothing driven to the
/// minimax), or the full expected squared ACF including the variance part.
inline Pulse design_pulse(const PulseDesignSpec& spec, double tol = 1e-7,
                          DesignReport* report = nullptr) {
  require(spec.n >= 2 && spec.n % 2 == 0 && spec.l >= 2,
          "design_pulse: requires even n and l >= 2");
  require(!spec.sidelobe_region.empty(), "design_pulse: empty sidelobe region");
  for (const Eigen::Index k : spec.sidelobe_region)
    require(k >= 1 && k < spec.l * spec.n, "design_pulse: lag outside [1, LN-1]");
  const auto geo = detail::make_geometry(spec);

  if (geo.na == 0) {
    // Zero roll-off: the feasible set is the single brickwall spectrum.
    RVec g = geo.fixed_g;
    if (report) *report = {iceberg_region_sum(taps_from_spectrum(g, spec.l),
                                              spec.sidelobe_region),
                           0.0, 0, true};
    return taps_from_spectrum(g, spec.l);
  }

  const double target_sum = static_cast<double>(geo.na) / 2.0;
  std::vector<detail::LagAffine> lags;
  lags.reserve(spec.sidelobe_region.size());
  for (const Eigen::Index k : spec.sidelobe_region) lags.push_back(detail::lag_affine(geo, k));

  const bool full = spec.objective == DesignObjective::full_expected;
  RMat vt;  // V^T for the variance term
  std::vector<CMat> vt_rows;
  if (full) {
    require(spec.bistochastic.rows() == spec.n && spec.bistochastic.cols() == spec.n,
            "design_pulse: bistochastic matrix must be N x N for full_expected");
    vt = spec.bistochastic.transpose();
  }

  // Precompute per-lag full-length affine forms for the variance term:
  // w_k = d_k + C_k x  with diagonal C over free indices.
  struct VarAffine {
    CVec d;        // length N
    CVec c_free;   // length na, diagonal entries on free indices
    CVec vt_d;     // V^T d
    CMat vt_cols;  // N x na: V^T restricted-diagonal columns
  };
  std::vector<VarAffine> var;
  if (full) {
    var.reserve(lags.size());
    for (std::size_t q = 0; q < lags.size(); ++q) {
      const Eigen::Index k = spec.sidelobe_region[q];
      const double base = 2.0 * kPi * static_cast<double>(k) /
                          (static_cast<double>(geo.l) * static_cast<double>(geo.n));
      const double ang_l = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(geo.l);
      const cxd phase_l{std::cos(ang_l), std::sin(ang_l)};
      VarAffine va;
      va.d = CVec::Zero(geo.n);
      va.c_free = CVec::Zero(geo.na);
      for (Eigen::Index m = 0; m < geo.n; ++m) {
        const cxd e{std::cos(base * static_cast<double>(m)),
                    -std::sin(base * static_cast<double>(m))};
        const bool is_free = m >= geo.free_begin && m < geo.free_begin + geo.na;
        va.d(m) = e * phase_l;
        if (is_free)
          va.c_free(m - geo.free_begin) = e * (1.0 - phase_l);
        else
          va.d(m) += geo.fixed_g(m) * e * (1.0 - phase_l);
      }
      va.vt_d = vt.cast<cxd>() * va.d;
      va.vt_cols.resize(geo.n, geo.na);
      for (Eigen::Index j = 0; j < geo.na; ++j)
        va.vt_cols.col(j) = vt.col(geo.free_begin + j).cast<cxd>() * va.c_free(j);
      var.push_back(std::move(va));
    }
  }

  const double km2 = spec.kurtosis - 2.0;
  const double inv_m = 1.0 / static_cast<double>(std::max<Eigen::Index>(spec.coherent_m, 1));

  auto lag_values = [&](const RVec& x) {
    std::vector<double> q(lags.size());
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const cxd u = lags[i].offset + lags[i].row.cwiseProduct(x.cast<cxd>()).sum();
      q[i] = std::norm(u);
      if (full) {
        const CVec w = var[i].d + var[i].c_free.cwiseProduct(x.cast<cxd>());
        const CVec vw = var[i].vt_d + var[i].vt_cols * x.cast<cxd>();
        q[i] += inv_m * (w.squaredNorm() + km2 * vw.squaredNorm());
      }
    }
    return q;
  };
  auto lag_gradients = [&](const RVec& x, std::vector<RVec>& grads) {
    grads.assign(lags.size(), RVec::Zero(geo.na));
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const cxd u = lags[i].offset + lags[i].row.cwiseProduct(x.cast<cxd>()).sum();
      for (Eigen::Index j = 0; j < geo.na; ++j)
        grads[i](j) = 2.0 * std::real(std::conj(u) * lags[i].row(j));
      if (full) {
        const CVec w = var[i].d + var[i].c_free.cwiseProduct(x.cast<cxd>());
        const CVec vw = var[i].vt_d + var[i].vt_cols * x.cast<cxd>();
        for (Eigen::Index j = 0; j < geo.na; ++j) {
          double gj = 2.0 * std::real(std::conj(w(j)) * var[i].c_free(j));
          gj += km2 * 2.0 * std::real(var[i].vt_cols.col(j).dot(vw));
          grads[i](j) += inv_m * gj;
        }
      }
    }
  };

  auto project = [&](const RVec& y) {
    return detail::design_feasible_projection(y, target_sum);
  };

  // Lipschitz bound from the assembled Hessian of the sum objective.
  RMat hess = RMat::Zero(geo.na, geo.na);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const CVec& b = lags[i].row;
    hess += 2.0 * (b.conjugate() * b.transpose()).real();
    if (full) {
      for (Eigen::Index a = 0; a < geo.na; ++a)
        for (Eigen::Index c = 0; c < geo.na; ++c) {
          double h = (a == c) ? 2.0 * std::norm(var[i].c_free(a)) : 0.0;
          h += km2 * 2.0 * std::real(var[i].vt_cols.col(a).dot(var[i].vt_cols.col(c)));
          hess(a, c) += inv_m * h;
        }
    }
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(hess, Eigen::EigenvaluesOnly);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);

  RVec x0(geo.na);
  for (Eigen::Index i = 0; i < geo.na; ++i)
    x0(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(geo.na);

  numerics::ApgOptions opt;
  opt.tol = tol;
  opt.max_iter = 40000;

  numerics::ApgResult sol;
  if (spec.objective == DesignObjective::max) {
    // Log-sum-exp homotopy down to the minimax objective.
    std::vector<RVec> grads;
    RVec x = project(x0);
    const auto q0 = lag_values(x);
    double temp = std::max(*std::max_element(q0.begin(), q0.end()), 1e-9) / 5.0;
    const double temp_min =
        std::max(tol / std::log(static_cast<double>(lags.size()) + 1.0), 1e-13);
    numerics::ApgOptions stage_opt = opt;
    stage_opt.max_iter = 6000;
    stage_opt.backtracking = true;
    while (true) {
      auto smooth_obj = [&](const RVec& v) {
        const auto q = lag_values(v);
        const double qmax = *std::max_element(q.begin(), q.end());
        double acc = 0.0;
        for (const double qi : q) acc += std::exp((qi - qmax) / temp);
        return qmax + temp * std::log(acc);
      };
      auto smooth_grad = [&](const RVec& v) -> RVec {
        const auto q = lag_values(v);
        const double qmax = *std::max_element(q.begin(), q.end());
        double z = 0.0;
        std::vector<double> wgt(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
          wgt[i] = std::exp((q[i] - qmax) / temp);
          z += wgt[i];
        }
        lag_gradients(v, grads);
        RVec g = RVec::Zero(geo.na);
        for (std::size_t i = 0; i < q.size(); ++i) g += (wgt[i] / z) * grads[i];
        return g;
      };
      sol = numerics::apg_minimize(smooth_obj, smooth_grad, project, x, 1.0 / lip,
                                   stage_opt);
      x = sol.x;
      if (temp <= temp_min) break;
      temp = std::max(temp / 5.0, temp_min);
    }
  } else {
    auto obj = [&](const RVec& v) {
      const auto q = lag_values(v);
      double acc = 0.0;
      for (const double qi : q) acc += qi;
      return acc;
    };
    auto grad = [&](const RVec& v) -> RVec {
      std::vector<RVec> grads;
      lag_gradients(v, grads);
      RVec g = RVec::Zero(geo.na);
      for (const auto& gi : grads) g += gi;
      return g;
    };
    sol = numerics::apg_minimize(obj, grad, project, x0, 1.0 / lip, opt);
  }

  const RVec g_full = detail::assemble_full_g(geo, project(sol.x));
  Pulse p = taps_from_spectrum(g_full, spec.l);
  p.alpha = static_cast<double>(geo.na) / static_cast<double>(geo.n);
  if (report) {
    const auto q = lag_values(sol.x);
    report->objective = spec.objective == DesignObjective::max
                            ? *std::max_element(q.begin(), q.end())
                            : std::accumulate(q.begin(), q.end(), 0.0);
    report->stat_residual = sol.stat_residual;
    report->iterations = sol.iterations;
    report->converged = sol.converged;
  }
  return p;
}

}  // namespace isacsim::pulse
