#ifndef LOGLIN_RNG_HPP
#define LOGLIN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace loglin {

/// Deterministic 64-bit generator (splitmix64). The same seed produces the
/// same sequence on every platform, which keeps all sampled artifacts
/// reproducible. Named sub-streams are derived by hashing a purpose string
/// into the seed, so e.g. effect draws and count draws never share state.
class SplitMix64 {
public:
  static constexpr const char *kName = "splitmix64";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Derive an independent stream for a named purpose.
  static SplitMix64 stream(std::uint64_t seed, std::string_view purpose) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (char c : purpose) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    SplitMix64 mixer(seed ^ h);
    return SplitMix64(mixer.next());
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), bias-free by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - (~0ull % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  double normal() {
    // Box-Muller; one value per call keeps the stream layout simple.
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Gamma(shape a, scale 1), Marsaglia-Tsang; a < 1 boosted via Gamma(a+1).
  double gamma(double a) {
    if (a < 1.0) {
      double u;
      do {
        u = uniform01();
      } while (u <= 0.0);
      return gamma(a + 1.0) * std::pow(u, 1.0 / a);
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x)
        return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    if (x + y <= 0.0) // both shapes tiny; retry
      return beta(a, b);
    return x / (x + y);
  }

  std::int64_t poisson(double mu) {
    std::int64_t total = 0;
    while (mu > 30.0) { // Poisson additivity keeps the product method exact
      total += poisson_small(30.0);
      mu -= 30.0;
    }
    return total + poisson_small(mu);
  }

private:
  std::int64_t poisson_small(double mu) {
    const double limit = std::exp(-mu);
    std::int64_t k = -1;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform01();
    } while (prod > limit);
    return k;
  }

  std::uint64_t state_;
};

} // namespace loglin

#endif
