// Seeded randomness with pinned algorithms.
//
// Every stochastic step in the pipeline (shuffles, subset draws, noise,
// parameter init) goes through this header so that a (seed, purpose) pair
// maps to the same byte-exact draw sequence on every platform and build.
// The generators are fixed by name:
//   * stream engine: std::mt19937_64 (bit-exact per the C++ standard)
//   * seed derivation: FNV-1a 64 over a purpose tag, finished with splitmix64
//   * bounded integers: rejection sampling on the high bits (no libc
//     distribution objects, whose output is implementation-defined)
//   * gaussians: Box-Muller with a cached spare
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace semcomm::rng {

// One splitmix64 step. Used both as a seed finalizer and to expand one
// 64-bit seed into independent engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ull) {
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t fnv1a64(std::uint64_t v, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stable stream seed for a named purpose. Extra values (epoch number,
// grid index, image index, ...) extend the key. Grid values that are
// floating point are hashed through their IEEE-754 bit pattern so the
// derivation never depends on decimal formatting.
inline std::uint64_t derive(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a64(base, fnv1a64(tag));
  return splitmix64(h);
}

inline std::uint64_t derive(std::uint64_t base, std::string_view tag,
                            std::uint64_t a) {
  std::uint64_t h = fnv1a64(a, fnv1a64(base, fnv1a64(tag)));
  return splitmix64(h);
}

inline std::uint64_t derive(std::uint64_t base, std::string_view tag,
                            std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = fnv1a64(b, fnv1a64(a, fnv1a64(base, fnv1a64(tag))));
  return splitmix64(h);
}

std::uint64_t bits_of(double v);

// A single deterministic draw stream. Not shareable between concurrent
// consumers; derive one stream per consumer instead.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n). Rejection sampling, n >= 1.
  std::uint64_t bounded(std::uint64_t n);

  // Standard normal via Box-Muller; draws come out in pairs, the second
  // one is cached so consecutive calls cost one transform per two draws.
  double gaussian();

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// In-place Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::span<T> items, Stream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(stream.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace semcomm::rng
