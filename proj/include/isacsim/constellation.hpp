// Discrete complex constellations: construction of standard PSK/QAM (square
// and cross) alphabets, moment validation, kurtosis, and reproducible
// sampling.
//
// Point ordering: PSK and square QAM points are enumerated along a
// binary-reflected Gray sequence (PSK over the phase index, square QAM per
// I/Q axis), so adjacent indices differ in one label bit. Cross QAM points
// are enumerated lexicographically by (re, im); labeling optimization is out
// of scope.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/rng.hpp"

namespace isacsim::constellation {

struct MomentReport {
  cxd mean{0.0, 0.0};
  cxd pseudo_variance{0.0, 0.0};  // E[s^2]
  double power = 0.0;             // E[|s|^2]
  double kurtosis = 0.0;          // E[|s|^4] / E[|s|^2]^2
  bool mean_ok = false;
  bool pseudo_variance_ok = false;
  bool power_ok = false;
  bool all_ok() const { return mean_ok && pseudo_variance_ok && power_ok; }
};

class Constellation {
 public:
  Constellation(CVec points, RVec probs, std::string label)
      : points_(std::move(points)), probs_(std::move(probs)), label_(std::move(label)) {
    require(points_.size() >= 1 && points_.size() == probs_.size(),
            "Constellation: points/probs size mismatch");
    require(all_finite(points_), "Constellation: non-finite point");
    check_contract(probs_.minCoeff() >= 0.0, "Constellation: negative probability");
    const double total = probs_.sum();
    check_contract(std::abs(total - 1.0) <= 1e-9,
                   "Constellation: probabilities sum to " + std::to_string(total));
    probs_ /= total;  // renormalize drift below 1e-9
    build_cdf();
  }

  /// Standard complex Gaussian stand-in CN(0,1). Not a finite alphabet; its
  /// moments are the analytic values and sampling draws i.i.d. normals.
  static Constellation gaussian() { return Constellation(GaussianTag{}); }

  const CVec& points() const { return points_; }
  const RVec& probs() const { return probs_; }
  const std::string& label() const { return label_; }
  bool is_gaussian() const { return gaussian_; }
  Eigen::Index size() const { return points_.size(); }

  MomentReport moments(double tol = 1e-9) const {
    MomentReport r;
    if (gaussian_) {
      r.mean = {0.0, 0.0};
      r.pseudo_variance = {0.0, 0.0};
      r.power = 1.0;
      r.kurtosis = 2.0;
      r.mean_ok = r.pseudo_variance_ok = r.power_ok = true;
      return r;
    }
    cxd m1{0, 0}, m2p{0, 0};
    double m2 = 0, m4 = 0;
    for (Eigen::Index i = 0; i < points_.size(); ++i) {
      const cxd s = points_(i);
      const double p = probs_(i);
      m1 += p * s;
      m2p += p * s * s;
      const double a2 = std::norm(s);
      m2 += p * a2;
      m4 += p * a2 * a2;
    }
    r.mean = m1;
    r.pseudo_variance = m2p;
    r.power = m2;
    r.kurtosis = m4 / (m2 * m2);
    r.mean_ok = std::abs(m1) <= tol;
    r.pseudo_variance_ok = std::abs(m2p) <= tol;
    r.power_ok = std::abs(m2 - 1.0) <= tol;
    return r;
  }

  /// Normalized fourth moment; requires unit power.
  double kurtosis() const {
    if (gaussian_) return 2.0;
    const MomentReport r = moments();
    if (std::abs(r.power - 1.0) > 1e-9)
      throw ContractError("kurtosis: constellation power " + std::to_string(r.power) +
                          " != 1, normalize first");
    return r.kurtosis;
  }

  /// i.i.d. draws under probs; bit-reproducible for a fixed (seed, stream).
  CVec sample(Eigen::Index n, uint64_t seed, uint64_t stream = 0) const {
    require(n >= 1, "sample: n must be >= 1");
    Rng rng(seed, stream);
    CVec out(n);
    if (gaussian_) {
      for (Eigen::Index i = 0; i < n; ++i) out(i) = rng.cnormal();
      return out;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      const auto idx = std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                static_cast<std::ptrdiff_t>(cdf_.size()) - 1);
      out(i) = points_(idx);
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["label"] = label_;
    if (gaussian_) {
      j["gaussian"] = true;
      return j;
    }
    auto& pts = j["points"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < points_.size(); ++i)
      pts.push_back({points_(i).real(), points_(i).imag()});
    auto& pr = j["probs"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < probs_.size(); ++i) pr.push_back(probs_(i));
    return j;
  }

  static Constellation from_json(const nlohmann::json& j) {
    if (j.value("gaussian", false)) return gaussian();
    const auto& pts = j.at("points");
    const auto& pr = j.at("probs");
    require(pts.size() == pr.size() && !pts.empty(), "Constellation JSON: size mismatch");
    CVec points(pts.size());
    RVec probs(pr.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      points(static_cast<Eigen::Index>(i)) = cxd{pts[i].at(0).get<double>(),
                                                 pts[i].at(1).get<double>()};
      probs(static_cast<Eigen::Index>(i)) = pr[i].get<double>();
    }
    return Constellation(std::move(points), std::move(probs), j.value("label", ""));
  }

 private:
  struct GaussianTag {};
  explicit Constellation(GaussianTag) : label_("cn-gaussian"), gaussian_(true) {}

  void build_cdf() {
    cdf_.resize(static_cast<std::size_t>(probs_.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
      acc += probs_(i);
      cdf_[static_cast<std::size_t>(i)] = acc;
    }
    cdf_.back() = 1.0;
  }

  CVec points_;
  RVec probs_;
  std::string label_;
  bool gaussian_ = false;
  std::vector<double> cdf_;
};

enum class Kind { psk, qam };

namespace detail {

inline uint32_t gray(uint32_t m) { return m ^ (m >> 1); }

inline std::vector<double> axis_levels(int n_levels) {
  std::vector<double> lv(n_levels);
  for (int i = 0; i < n_levels; ++i) lv[i] = static_cast<double>(2 * i - (n_levels - 1));
  return lv;
}

inline Constellation make_psk(int order) {
  CVec pts(order);
  for (int m = 0; m < order; ++m) {
    const double ang = 2.0 * kPi * static_cast<double>(gray(static_cast<uint32_t>(m))) /
                           static_cast<double>(order) +
                       kPi / static_cast<double>(order);
    pts(m) = cxd{std::cos(ang), std::sin(ang)};
  }
  return Constellation(pts, RVec::Constant(order, 1.0 / order),
                       std::to_string(order) + "-psk");
}

inline Constellation make_square_qam(int order) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  const auto lv = axis_levels(side);
  CVec pts(order);
  double power = 0.0;
  int idx = 0;
  for (int i = 0; i < side; ++i)
    for (int q = 0; q < side; ++q) {
      const double a = lv[gray(static_cast<uint32_t>(i))];
      const double b = lv[gray(static_cast<uint32_t>(q))];
      pts(idx++) = cxd{a, b};
      power += a * a + b * b;
    }
  pts /= std::sqrt(power / order);
  return Constellation(pts, RVec::Constant(order, 1.0 / order),
                       std::to_string(order) + "-qam");
}

// Cross constellation: odd-integer lattice of the given side with c x c
// corner blocks removed (6/1, 12/2, 24/4, 48/8 for orders 32..2048).
inline Constellation make_cross_qam(int order, int side, int cut) {
  const auto lv = axis_levels(side);
  const double corner_limit = static_cast<double>(side - 1 - 2 * cut);
  std::vector<cxd> kept;
  kept.reserve(order);
  for (double a : lv)
    for (double b : lv) {
      if (std::abs(a) > corner_limit && std::abs(b) > corner_limit) continue;
      kept.push_back(cxd{a, b});
    }
  check_contract(static_cast<int>(kept.size()) == order, "cross-QAM: bad lattice");
  std::sort(kept.begin(), kept.end(), [](const cxd& x, const cxd& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  CVec pts(order);
  double power = 0.0;
  for (int i = 0; i < order; ++i) {
    pts(i) = kept[static_cast<std::size_t>(i)];
    power += std::norm(pts(i));
  }
  pts /= std::sqrt(power / order);
  return Constellation(pts, RVec::Constant(order, 1.0 / order),
                       std::to_string(order) + "-qam");
}

}  // namespace detail

/// Builds a unit-power standard constellation with uniform probabilities.
/// BPSK and 8-QAM are rejected: they violate the rotational-symmetry moment
/// constraints every other supported alphabet satisfies.
inline Constellation make_standard(Kind kind, int order) {
  if (kind == Kind::psk) {
    require(order >= 4, "make_standard: PSK order must be >= 4 (BPSK unsupported)");
    return detail::make_psk(order);
  }
  switch (order) {
    case 16:
    case 64:
    case 256:
    case 1024:
      return detail::make_square_qam(order);
    case 32:
      return detail::make_cross_qam(order, 6, 1);
    case 128:
      return detail::make_cross_qam(order, 12, 2);
    case 512:
      return detail::make_cross_qam(order, 24, 4);
    case 2048:
      return detail::make_cross_qam(order, 48, 8);
    default:
      throw InvalidArgument("make_standard: unsupported QAM order " + std::to_string(order));
  }
}

inline MomentReport validate_moments(const Constellation& c, double tol = 1e-9) {
  return c.moments(tol);
}

inline double kurtosis(const Constellation& c) { return c.kurtosis(); }

/// Two-ring APSK with radii (r, 3r), ring probabilities (0.9, 0.1), 8 points
/// per ring, unit power. Kurtosis 25/9 (~2.78) > 2, i.e. super-Gaussian;
/// used wherever a heavy-tailed alphabet is needed to flip the modulation
/// ordering.
inline Constellation super_gaussian_test() {
  const int per_ring = 8;
  CVec pts(2 * per_ring);
  RVec probs(2 * per_ring);
  const double r = std::sqrt(5.0 / 9.0);  // 0.9 r^2 + 0.1 (3r)^2 = 1
  for (int k = 0; k < per_ring; ++k) {
    const double ang = 2.0 * kPi * k / per_ring;
    pts(k) = r * cxd{std::cos(ang), std::sin(ang)};
    probs(k) = 0.9 / per_ring;
    const double ang2 = ang + kPi / per_ring;
    pts(per_ring + k) = 3.0 * r * cxd{std::cos(ang2), std::sin(ang2)};
    probs(per_ring + k) = 0.1 / per_ring;
  }
  return Constellation(pts, probs, "apsk-2ring");
}

}  // namespace isacsim::constellation
