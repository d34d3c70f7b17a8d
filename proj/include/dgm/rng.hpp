#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace dgm {

namespace detail {

// SplitMix64 finalizer; used to derive stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// One member of a reproducible family of generators indexed by (seed, stream).
// Distinct stream ids give independent sequences for practical purposes, so
// parallel workers (one chain, one bootstrap resample, one predictive draw)
// each own a stream and results do not depend on scheduling. substream(child)
// derives a further id deterministically: stream' = mix64(stream ^ mix64(child)).
//
// All variate generators are implemented here rather than via <random>
// distributions so that output is identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::uint64_t s0 = detail::mix64(seed ^ detail::mix64(stream + 1));
    std::uint64_t s1 = detail::mix64(s0);
    std::seed_seq seq{static_cast<std::uint32_t>(s0),
                      static_cast<std::uint32_t>(s0 >> 32),
                      static_cast<std::uint32_t>(s1),
                      static_cast<std::uint32_t>(s1 >> 32)};
    engine_.seed(seq);
  }

  RngStream substream(std::uint64_t child) const {
    return RngStream(seed_, detail::mix64(stream_ ^ detail::mix64(child)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Box-Muller; two uniforms per draw.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double exponential(double rate = 1.0) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(1.0 - uniform()) / rate;
  }

  // Gamma(shape, rate) via Marsaglia-Tsang for shape >= 1; shapes below one
  // are boosted with the u^(1/shape) power transform.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, rate);
      const double u = 1.0 - uniform();  // (0, 1]
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = 1.0 - uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  // Poisson(mean): product-of-uniforms inversion below mean 10, Hormann's
  // PTRS transformed rejection above.
  long poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
      const double limit = std::exp(-mean);
      long k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * log_mean - mean - std::lgamma(kf + 1.0))
        return static_cast<long>(kf);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace dgm
