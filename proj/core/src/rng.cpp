#include "semcomm/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace semcomm::rng {

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t Stream::bounded(std::uint64_t n) {
  // Reject draws above the largest multiple of n so the result is unbiased.
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

double Stream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace semcomm::rng
