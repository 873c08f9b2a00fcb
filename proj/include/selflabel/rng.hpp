#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "selflabel/matrix.hpp"

namespace selflabel {

// Counter-based deterministic generator. Each draw hashes (seed, counter)
// through the splitmix64 finalizer, so the stream is identical across runs,
// platforms and thread counts, and substreams can be split off by label
// without consuming draws from the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGamma); }

  // Uniform in (0, 1]; never returns 0 so it is log-safe.
  double next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (one value per pair, second cached).
  double next_gaussian();

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * (next_uniform() - 0x1.0p-53);
  }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Child stream derived from a label; independent of this stream's counter.
  Rng split(std::string_view label) const;

  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Matrix of i.i.d. N(0,1) draws; deterministic under fixed rng state.
DenseMatrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace selflabel
