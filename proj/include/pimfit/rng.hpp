#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace pimfit {

// SplitMix64 finalizer; used to fold (seed, key...) tuples into independent
// stream seeds so that e.g. replicate r and method m get disjoint streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, Keys... rest) {
  return derive_seed(splitmix64(seed ^ splitmix64(key)), rest...);
}

// mt19937_64 core (bit-stable across platforms by the standard) with
// hand-rolled distributions: std::uniform_*/normal_distribution are
// implementation-defined, which would break seed reproducibility claims.
class Rng {
public:
  explicit Rng(std::uint64_t seed)
      : engine_(derive_seed(seed)), base_seed_(seed) {}

  // Independent child stream keyed by (this seed, keys...).
  template <typename... Keys>
  Rng split(Keys... keys) const {
    return Rng(derive_seed(base_seed_, static_cast<std::uint64_t>(keys)...));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi], Lemire-style rejection on the 64-bit stream.
  std::uint64_t uniform_u64_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_u64_below(span));
  }

  // Box-Muller pair, one spare cached.
  double normal(double mean = 0.0, double sd = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sd * spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mean + sd * r * std::cos(a);
  }

  double bernoulli(double p) { return uniform() < p ? 1.0 : 0.0; }

  // Fisher-Yates over an index array.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t t = 0; t + 1 < n; ++t) {
      const std::size_t j =
          t + static_cast<std::size_t>(uniform_u64_below(n - t));
      std::swap(idx[t], idx[j]);
    }
    return idx;
  }

  // First k entries of a Fisher-Yates pass: a size-k sample without
  // replacement, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t t = 0; t < k && t + 1 < n; ++t) {
      const std::size_t j =
          t + static_cast<std::size_t>(uniform_u64_below(n - t));
      std::swap(idx[t], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

private:
  std::mt19937_64 engine_;
  std::uint64_t base_seed_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pimfit
