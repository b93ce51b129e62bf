#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace ldlc {

// Deterministic pseudo-random primitives used for matrix generation and
// channel simulation. Everything here is integer arithmetic plus libm, so
// streams are reproducible across standard libraries; std::uniform_int_distribution
// and friends are implementation-defined and deliberately avoided.

/// splitmix64 finalizer. Statistically solid for simulation workloads.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stateless stream derivation: (seed, a, b) -> independent 64-bit key.
/// Used to give every (sweep point, trial) pair its own generator, which
/// makes parallel simulation schedules reproducible at any thread count.
constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                      std::uint64_t b) noexcept {
  std::uint64_t x = splitmix64(seed ^ 0xA0761D6478BD642FULL);
  x = splitmix64(x ^ (a + 0xE7037ED1A0B428DBULL));
  x = splitmix64(x ^ (b + 0x8EBC6AF09C88C6E3ULL));
  return x;
}

/// Counter-based generator: output i is a pure function of (key, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept { return splitmix64(key_ + counter_++ * 0x9E3779B97F4A7C15ULL); }

  /// Uniform double in (0, 1].
  double next_open_unit() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform double in [0, 1).
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the pair's second value is cached.
  double next_gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_open_unit();
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

  /// Uniform signed integer in [lo, hi], inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool next_bool() noexcept { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates permutation of {0, ..., n-1}.
inline std::vector<int> random_permutation(int n, CounterRng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace ldlc
