// Counter-based RNG (Philox4x32-10) for reproducible, splittable random streams.
//
// Every stochastic routine in the library takes an explicit 64-bit seed and
// derives per-trial streams by counter offsets, so Monte Carlo results are
// bit-identical for a fixed seed regardless of evaluation order or thread
// count.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

#include "isacsim/common.hpp"

namespace isacsim {

namespace detail {
inline void philox_round(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
  constexpr uint64_t kMul0 = 0xD2511F53, kMul1 = 0xCD9E8D57;
  const uint64_t p0 = kMul0 * static_cast<uint64_t>(ctr[0]);
  const uint64_t p1 = kMul1 * static_cast<uint64_t>(ctr[2]);
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  key[0] += 0x9E3779B9;  // golden-ratio Weyl constants
  key[1] += 0xBB67AE85;
}
}  // namespace detail

/// 10-round Philox4x32 block function.
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) detail::philox_round(ctr, key);
  return ctr;
}

/// A deterministic random stream identified by (seed, stream id).
///
/// Streams with distinct ids are statistically independent, which is what
/// makes per-trial parallel Monte Carlo reproducible: trial t uses
/// Rng(seed, t) no matter which worker runs it.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  uint32_t next_u32() {
    if (idx_ == 4) refill();
    return block_[idx_++];
  }

  uint64_t next_u64() {
    const uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller (no rejection, so the stream advance is
  /// input-independent).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * kPi * u2);
    have_cached_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  /// Circularly-symmetric complex normal CN(0, 1).
  cxd cnormal() {
    const double s = 1.0 / std::sqrt(2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  void refill() {
    const std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(counter_), static_cast<uint32_t>(counter_ >> 32),
        static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
    const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed_),
                                         static_cast<uint32_t>(seed_ >> 32)};
    block_ = philox4x32(ctr, key);
    ++counter_;
    idx_ = 0;
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  std::array<uint32_t, 4> block_{};
  int idx_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace isacsim
