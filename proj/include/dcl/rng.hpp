#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dcl {

/// Deterministic 64-bit generator (splitmix64). Every random decision in the
/// toolkit flows through this engine so that runs are bit-reproducible across
/// platforms; the standard library shuffle/distribution facilities are
/// implementation-defined and are not used anywhere.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }
};

namespace detail {
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t scramble(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derives a child seed from the root seed, a purpose tag and up to two
/// indices (e.g. epoch or (round, level)). Distinct purposes give independent
/// streams from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = detail::fnv1a64(purpose);
  h = detail::fnv1a64_u64(root, h);
  h = detail::fnv1a64_u64(a, h);
  h = detail::fnv1a64_u64(b, h);
  return detail::scramble(h);
}

/// In-place Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Chooses k of n indices uniformly without replacement. The result is sorted
/// ascending so that callers get a canonical order (k == n returns 0..n-1).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace dcl
