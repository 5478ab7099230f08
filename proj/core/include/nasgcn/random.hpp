#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nasgcn {

/// SplitMix64 finalizer. Used as a cheap, well-mixed 64-bit hash.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a byte string.
constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derives an independent stream seed from a root seed and a fixed label, so
/// that e.g. the sampling stream does not shift when GCN settings change.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept {
  return splitmix64(root ^ splitmix64(fnv1a(label)));
}

/// Maps a 64-bit hash to a double in the open interval (0, 1).
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal deviate that is a pure function of `key` (Box-Muller over
/// two hashed uniforms).
double hashed_normal(std::uint64_t key) noexcept;

/// Seeded generator with platform-independent output. The standard
/// distributions are implementation-defined, so the draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n), unbiased. n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return hashed_normal(engine_()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nasgcn
