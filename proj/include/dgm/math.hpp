#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dgm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)); tolerates -inf operands.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(const std::vector<double>& v) {
  double acc = kNegInf;
  for (double x : v) acc = log_sum_exp(acc, x);
  return acc;
}

// Gamma(shape, rate) density on the log scale; zero mass off the support.
inline double gamma_logpdf(double x, double shape, double rate) {
  if (x <= 0.0 || shape <= 0.0 || rate <= 0.0) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

// Poisson(mean) pmf on the log scale; mean == 0 is a point mass at zero.
inline double poisson_logpmf(long k, double mean) {
  if (k < 0 || mean < 0.0) return kNegInf;
  if (mean == 0.0) return k == 0 ? 0.0 : kNegInf;
  return k * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample variance; zero for fewer than two points.
inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double sample_sd(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v));
}

// Inverse-CDF quantile of an ascending-sorted sample: the ceil(q*N)-th order
// statistic (1-based), clamped to the ends.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const long n = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(q * static_cast<double>(n) - 1e-9)) - 1;
  idx = std::clamp(idx, 0L, n - 1);
  return sorted[static_cast<std::size_t>(idx)];
}

inline double median_sorted(const std::vector<double>& sorted) {
  if (sorted.empty()) throw std::invalid_argument("median of empty sample");
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace dgm
