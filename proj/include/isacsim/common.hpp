// Shared aliases, error types, and small utilities used across the library.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace isacsim {

using cxd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cxd kJ{0.0, 1.0};

/// Thrown when an argument violates an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Thrown when a value breaks a documented structural invariant
/// (non-Hermitian input, non-unitary basis, broken probability vector, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a problem instance has an empty feasible set.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void check_contract(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline double db10(double power_ratio) { return 10.0 * std::log10(power_ratio); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// Checks every entry for NaN/Inf.
template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace isacsim
