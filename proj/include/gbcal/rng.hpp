#pragma once

// Self-contained, splittable RNG plus the samplers the experiment harness
// needs. Everything here is fully specified by the seed: no std::*_distribution
// (their sequences differ across standard libraries, which would break the
// byte-identical report contract).

#include <cmath>
#include <cstdint>

namespace gbcal {

// Algorithm stamp echoed into experiment reports.
inline constexpr const char* kRngStamp =
    "splitmix64;box-muller;marsaglia-tsang;knuth-poisson;v1";

// Vigna's splitmix64. Splitting hands out an independent stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  SplitMix64 split() { return SplitMix64(next() ^ 0x9E3779B97F4A7C15ULL); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe under log().
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Standard normal via Box-Muller (cosine branch; one pair of uniforms per draw).
inline double sample_normal(SplitMix64& rng) {
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double sample_normal(SplitMix64& rng, double mean, double sd) {
  return mean + sd * sample_normal(rng);
}

// Marsaglia-Tsang for shape >= 1; shapes below 1 are boosted and rescaled by
// u^{1/shape}.
inline double sample_gamma(SplitMix64& rng, double shape, double rate) {
  if (shape < 1.0) {
    const double u = rng.uniform_open();
    return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

// Knuth's product method; splits large means to keep exp(-mean) representable.
inline long sample_poisson(SplitMix64& rng, double mean) {
  if (mean > 500.0) {
    return sample_poisson(rng, mean * 0.5) + sample_poisson(rng, mean * 0.5);
  }
  const double limit = std::exp(-mean);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform_open();
  } while (p > limit);
  return k - 1;
}

}  // namespace gbcal
