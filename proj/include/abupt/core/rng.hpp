#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace abupt {

/// Seeded generator with platform-independent draws. std::mt19937_64 output
/// is fixed by the standard; the distribution adaptors are not, so the
/// conversions to real numbers live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Normal(0, std) truncated to [-2 std, 2 std].
  double truncated_normal(double std) {
    double x;
    do {
      x = normal();
    } while (std::abs(x) > 2.0);
    return x * std;
  }

  /// Derives an independent stream, e.g. one per sample or per step.
  Rng fork(std::uint64_t salt) { return Rng(next_u64() ^ mix(salt)); }

  /// Seed of an independent stream keyed by (seed, salt).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) { return mix(seed ^ mix(salt)); }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace abupt
