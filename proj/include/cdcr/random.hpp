#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cdcr {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Rejection sampling keeps results identical
/// across standard library implementations.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_index(rng, i)]);
  }
}

/// Moves a uniform sample of `count` elements (without replacement) to the
/// front of `items` and truncates to it.
template <class T>
void sample_prefix(std::vector<T>& items, std::size_t count, Rng& rng) {
  if (count >= items.size()) return;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(items[i], items[i + uniform_index(rng, items.size() - i)]);
  }
  items.resize(count);
}

/// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace cdcr
