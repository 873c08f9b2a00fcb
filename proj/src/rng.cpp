#include "selflabel/rng.hpp"

#include <cmath>

namespace selflabel {

double Rng::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Rng Rng::split(std::string_view label) const {
  std::uint64_t h = seed_ ^ 0x51ed270b8d9b17cdULL;
  for (char c : label) h = mix(h ^ static_cast<std::uint8_t>(c));
  return Rng(mix(h));
}

DenseMatrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("sample_gaussian: zero-size request");
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = rng.next_gaussian();
  return m;
}

}  // namespace selflabel
