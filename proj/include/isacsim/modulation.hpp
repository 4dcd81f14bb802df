// Unitary modulation bases (single-carrier, OFDM, CDMA/Walsh, AFDM, OTFS),
// the bistochastic matrix that couples a basis to the ACF variance, and the
// provably optimal bases for sub-/super-Gaussian alphabets.
#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "isacsim/common.hpp"
#include "isacsim/numerics.hpp"

namespace isacsim::modulation {

enum class Kind { sc, ofdm, cdma, afdm, otfs, custom };

inline std::string kind_name(Kind k) {
  switch (k) {
    case Kind::sc: return "sc";
    case Kind::ofdm: return "ofdm";
    case Kind::cdma: return "cdma";
    case Kind::afdm: return "afdm";
    case Kind::otfs: return "otfs";
    default: return "custom";
  }
}

struct AfdmParams {
  double c1 = 0.0;
  double c2 = 0.0;
};

struct OtfsParams {
  Eigen::Index n1 = 0;  // time slots
  Eigen::Index n2 = 0;  // subcarriers; n = n1 * n2
};

struct ModulationBasis {
  Kind kind = Kind::custom;
  CMat matrix;  // N x N unitary
  AfdmParams afdm;
  OtfsParams otfs;

  Eigen::Index n() const { return matrix.rows(); }

  void check_unitary(double tol = 1e-9) const {
    const Eigen::Index nn = matrix.rows();
    check_contract(matrix.cols() == nn, "ModulationBasis: matrix not square");
    const double resid =
        (matrix.adjoint() * matrix - CMat::Identity(nn, nn)).cwiseAbs().maxCoeff();
    check_contract(resid <= tol, "ModulationBasis: not unitary, residual " +
                                     std::to_string(resid));
  }

  /// Serialized as reconstruction metadata only; matrices are rebuilt.
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind);
    j["n"] = n();
    if (kind == Kind::afdm) j["params"] = {{"c1", afdm.c1}, {"c2", afdm.c2}};
    if (kind == Kind::otfs) j["params"] = {{"n1", otfs.n1}, {"n2", otfs.n2}};
    return j;
  }
};

namespace detail {

inline RMat sylvester_hadamard(Eigen::Index n) {
  require(is_power_of_two(static_cast<std::size_t>(n)),
          "cdma basis requires n to be a power of 2");
  RMat h = RMat::Ones(1, 1);
  while (h.rows() < n) {
    const Eigen::Index m = h.rows();
    RMat h2(2 * m, 2 * m);
    h2 << h, h, h, -h;
    h = std::move(h2);
  }
  return h;
}

inline CMat chirp_diag(double c, Eigen::Index n) {
  CVec d(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double ang = -2.0 * kPi * c * static_cast<double>(k) * static_cast<double>(k);
    d(k) = cxd{std::cos(ang), std::sin(ang)};
  }
  return d.asDiagonal();
}

}  // namespace detail

inline ModulationBasis make_basis(Kind kind, Eigen::Index n, AfdmParams afdm = {},
                                  OtfsParams otfs = {}) {
  require(n >= 1, "make_basis: n must be >= 1");
  ModulationBasis b;
  b.kind = kind;
  switch (kind) {
    case Kind::sc:
      b.matrix = CMat::Identity(n, n);
      break;
    case Kind::ofdm:
      b.matrix = numerics::unitary_dft(n).adjoint();
      break;
    case Kind::cdma:
      b.matrix = detail::sylvester_hadamard(n).cast<cxd>() /
                 std::sqrt(static_cast<double>(n));
      break;
    case Kind::afdm: {
      const CMat lam1 = detail::chirp_diag(afdm.c1, n);
      const CMat lam2 = detail::chirp_diag(afdm.c2, n);
      b.matrix = lam1.adjoint() * numerics::unitary_dft(n).adjoint() * lam2.adjoint();
      b.afdm = afdm;
      break;
    }
    case Kind::otfs: {
      require(otfs.n1 >= 1 && otfs.n2 >= 1 && otfs.n1 * otfs.n2 == n,
              "make_basis: otfs requires n = n1 * n2");
      const CMat f1h = numerics::unitary_dft(otfs.n1).adjoint();
      b.matrix = CMat::Zero(n, n);
      for (Eigen::Index i = 0; i < otfs.n1; ++i)
        for (Eigen::Index j = 0; j < otfs.n1; ++j)
          b.matrix.block(i * otfs.n2, j * otfs.n2, otfs.n2, otfs.n2) =
              f1h(i, j) * CMat::Identity(otfs.n2, otfs.n2);
      b.otfs = otfs;
      break;
    }
    default:
      throw InvalidArgument("make_basis: custom bases are constructed directly");
  }
  b.check_unitary();
  return b;
}

struct BistochasticMatrix {
  RMat entries;

  void check(double tol = 1e-9) const {
    check_contract(entries.minCoeff() >= -1e-12, "bistochastic: negative entry");
    for (Eigen::Index i = 0; i < entries.rows(); ++i)
      check_contract(std::abs(entries.row(i).sum() - 1.0) <= tol,
                     "bistochastic: row sum off");
    for (Eigen::Index j = 0; j < entries.cols(); ++j)
      check_contract(std::abs(entries.col(j).sum() - 1.0) <= tol,
                     "bistochastic: column sum off");
  }
};

/// V = |F_N U|^2 elementwise. Rows/columns sum to 1 because F_N U is unitary.
inline BistochasticMatrix bistochastic_v(const ModulationBasis& u) {
  u.check_unitary();
  const CMat fu = numerics::unitary_dft(u.n()) * u.matrix;
  BistochasticMatrix v{fu.cwiseAbs2()};
  v.check();
  return v;
}

/// Ranging-optimal basis construction. Sub-Gaussian alphabets (kurtosis < 2)
/// get OFDM up to subcarrier permutation and phases; super-Gaussian ones get
/// single-carrier up to symbol permutation and phases.
enum class KurtosisSign { sub_gaussian, super_gaussian };

inline ModulationBasis optimal_basis(KurtosisSign sign, Eigen::Index n,
                                     const std::vector<Eigen::Index>& permutation,
                                     const RVec& phases) {
  require(static_cast<Eigen::Index>(permutation.size()) == n && phases.size() == n,
          "optimal_basis: permutation/phases must have length n");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const Eigen::Index p : permutation) {
    require(p >= 0 && p < n && !seen[static_cast<std::size_t>(p)],
            "optimal_basis: invalid permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
  CMat pi = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) pi(permutation[static_cast<std::size_t>(i)], i) = 1.0;
  CVec d(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i) = cxd{std::cos(phases(i)), std::sin(phases(i))};

  ModulationBasis b;
  b.kind = Kind::custom;
  if (sign == KurtosisSign::sub_gaussian)
    b.matrix = numerics::unitary_dft(n).adjoint() * pi * d.asDiagonal().toDenseMatrix();
  else
    b.matrix = pi * d.asDiagonal().toDenseMatrix();
  b.check_unitary();
  return b;
}

}  // namespace isacsim::modulation
