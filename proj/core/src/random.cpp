#include "nasgcn/random.hpp"

#include <cmath>
#include <numbers>

namespace nasgcn {

double hashed_normal(std::uint64_t key) noexcept {
  const double u1 = to_unit_open(splitmix64(key));
  const double u2 = to_unit_open(splitmix64(key ^ 0xD1B54A32D192ED03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Reject the lowest 2^64 mod n values so every residue is equally likely.
  const std::uint64_t threshold = (std::uint64_t{0} - n) % n;
  std::uint64_t x = engine_();
  while (x < threshold) x = engine_();
  return x % n;
}

}  // namespace nasgcn
