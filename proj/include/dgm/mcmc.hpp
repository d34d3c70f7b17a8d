#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgm/math.hpp"
#include "dgm/rng.hpp"

namespace dgm {

// Numerical breakdown during sampling or scoring. CLI maps this to exit 3.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One slice-sampling update for a variable on (0, inf). The walk happens on
// u = log(x) with the Jacobian folded into the level function, so positivity
// needs no boundary handling. Stepping out is capped; hitting the cap means
// the target is pathological (or the width absurd) and is reported as such.
template <typename LogDensity>
double slice_sample(LogDensity&& logf, double current, double width, RngStream& rng,
                    int max_steps = 1000) {
  if (!(current > 0.0) || !std::isfinite(current))
    throw std::invalid_argument("slice_sample: current point must be positive and finite");
  if (!(width > 0.0)) throw std::invalid_argument("slice_sample: width must be positive");
  auto g = [&](double u) { return logf(std::exp(u)) + u; };
  const double u0 = std::log(current);
  const double g0 = g(u0);
  if (!std::isfinite(g0))
    throw numeric_error("slice_sample: target not finite at current point");
  const double level = g0 - rng.exponential(1.0);

  // stepping out
  double lo = u0 - width * rng.uniform();
  double hi = lo + width;
  int steps = 0;
  while (g(lo) > level) {
    lo -= width;
    if (++steps > max_steps)
      throw numeric_error("slice_sample: stepping out exceeded " +
                          std::to_string(max_steps) + " expansions (left)");
  }
  steps = 0;
  while (g(hi) > level) {
    hi += width;
    if (++steps > max_steps)
      throw numeric_error("slice_sample: stepping out exceeded " +
                          std::to_string(max_steps) + " expansions (right)");
  }

  // shrinkage
  for (int it = 0; it < 100000; ++it) {
    const double u1 = lo + (hi - lo) * rng.uniform();
    if (g(u1) > level) return std::exp(u1);
    if (u1 < u0)
      lo = u1;
    else
      hi = u1;
  }
  throw numeric_error("slice_sample: shrinkage failed to accept");
}

// Exact draw from an unnormalized log pmf on {0, 1, ...} whose weights
// eventually decrease. Enumerates with a running log-sum-exp and stops once
// the mode has been passed and a new term contributes relative mass below
// tail_tol; then samples by inverse CDF over the enumerated table.
template <typename LogPmf>
long discrete_sample(LogPmf&& logpmf, RngStream& rng, double tail_tol = 1e-12,
                     long max_states = 1000000) {
  if (!(tail_tol > 0.0 && tail_tol < 1.0))
    throw std::invalid_argument("discrete_sample: tail_tol must be in (0, 1)");
  const double log_tol = std::log(tail_tol);
  std::vector<double> logw;
  double total = kNegInf;
  double best = kNegInf;
  long best_at = 0;
  long count = 0;
  for (; count < max_states; ++count) {
    const double w = logpmf(count);
    logw.push_back(w);
    total = log_sum_exp(total, w);
    if (w > best) {
      best = w;
      best_at = count;
    }
    if (count > best_at && w - total < log_tol) {
      ++count;
      break;
    }
  }
  if (count >= max_states)
    throw numeric_error("discrete_sample: enumeration exceeded " +
                        std::to_string(max_states) + " states");
  if (total == kNegInf)
    throw numeric_error("discrete_sample: target has no mass");

  const double u = rng.uniform();
  double acc = kNegInf;
  for (long zv = 0; zv < count; ++zv) {
    acc = log_sum_exp(acc, logw[zv]);
    if (std::exp(acc - total) >= u) return zv;
  }
  return count - 1;  // roundoff remainder lands on the last enumerated state
}

// Shortest contiguous window of an ascending-sorted sample holding
// ceil(level * N) points; ties resolve to the lowest start.
inline std::pair<double, double> hpd_interval(const std::vector<double>& sorted,
                                              double level) {
  if (sorted.empty()) throw std::invalid_argument("hpd_interval: empty sample");
  if (!(level > 0.0 && level <= 1.0))
    throw std::invalid_argument("hpd_interval: level must be in (0, 1]");
  const long N = static_cast<long>(sorted.size());
  long m = static_cast<long>(std::ceil(level * static_cast<double>(N) - 1e-9));
  m = std::clamp(m, 1L, N);
  long best_t = 0;
  double best_w = std::numeric_limits<double>::infinity();
  for (long t = 0; t + m <= N; ++t) {
    const double w = sorted[t + m - 1] - sorted[t];
    if (w < best_w) {
      best_w = w;
      best_t = t;
    }
  }
  return {sorted[best_t], sorted[best_t + m - 1]};
}

// Gelman-Rubin potential scale reduction factor. Needs at least two chains of
// equal length; a single chain has no between-chain information and yields
// the not-applicable marker.
inline std::optional<double> psrf(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) return std::nullopt;
  const std::size_t len = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != len) throw std::invalid_argument("psrf: chains must have equal length");
  if (len < 10) throw std::invalid_argument("psrf: chains too short");

  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(len);
  std::vector<double> chain_means;
  double W = 0.0;
  for (const auto& c : chains) {
    chain_means.push_back(mean(c));
    W += sample_variance(c);
  }
  W /= m;
  const double B_over_n = sample_variance(chain_means);  // B/n in the usual notation
  if (W <= 0.0) return (B_over_n <= 0.0) ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (nd - 1.0) / nd * W + B_over_n;
  return std::sqrt(var_plus / W);
}

// Pooled posterior summary for one scalar parameter.
struct ParamSummary {
  std::string name;
  double mean = 0.0, median = 0.0, sd = 0.0;
  double hpd_lo = 0.0, hpd_hi = 0.0, hpd_level = 0.9;
  std::optional<double> psrf;
};

inline ParamSummary summarize_chains(const std::string& name,
                                     const std::vector<std::vector<double>>& chains,
                                     double hpd_level = 0.9) {
  ParamSummary s;
  s.name = name;
  s.hpd_level = hpd_level;
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.empty()) throw std::invalid_argument("summarize_chains: no draws");
  s.mean = mean(pooled);
  s.sd = sample_sd(pooled);
  std::sort(pooled.begin(), pooled.end());
  s.median = median_sorted(pooled);
  auto [lo, hi] = hpd_interval(pooled, hpd_level);
  s.hpd_lo = lo;
  s.hpd_hi = hi;
  s.psrf = chains.size() >= 2 ? psrf(chains) : std::nullopt;
  return s;
}

}  // namespace dgm
