// Thin FFTW3 wrapper with the library-wide unitary DFT convention.
//
// Both directions carry a 1/sqrt(n) factor, matching the dense matrix from
// numerics::unitary_dft, so spectra and signals can be moved between the
// matrix and FFT paths without bookkeeping.
#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>

#include "isacsim/common.hpp"

namespace isacsim::fft {

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  // Plans are created once per (n, sign) with FFTW_UNALIGNED so they can be
  // re-executed on any caller buffer. fftw_execute_dft is thread-safe; plan
  // creation is serialized here.
  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> dummy_in(n), dummy_out(n);
    fftw_plan p = fftw_plan_dft_1d(n, dummy_in.data(), dummy_out.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void execute(const CVec& in, CVec& out, int sign) {
  const int n = static_cast<int>(in.size());
  out.resize(n);
  fftw_plan p = PlanCache::instance().get(n, sign);
  fftw_execute_dft(p,
                   reinterpret_cast<fftw_complex*>(const_cast<cxd*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  out *= 1.0 / std::sqrt(static_cast<double>(n));
}

}  // namespace detail

/// Unitary forward DFT: X_k = (1/sqrt(n)) sum_t x_t e^{-j2pi kt/n}.
inline CVec forward(const CVec& x) {
  CVec out;
  detail::execute(x, out, FFTW_FORWARD);
  return out;
}

/// Unitary inverse DFT: x_t = (1/sqrt(n)) sum_k X_k e^{+j2pi kt/n}.
inline CVec inverse(const CVec& X) {
  CVec out;
  detail::execute(X, out, FFTW_BACKWARD);
  return out;
}

/// Circular convolution of equal-length vectors.
inline CVec circular_convolve(const CVec& a, const CVec& b) {
  require(a.size() == b.size(), "circular_convolve: length mismatch");
  const double root_n = std::sqrt(static_cast<double>(a.size()));
  CVec prod = forward(a).cwiseProduct(forward(b)) * root_n;
  return inverse(prod);
}

}  // namespace isacsim::fft
