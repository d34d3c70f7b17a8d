#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgm/math.hpp"
#include "dgm/mcmc.hpp"
#include "dgm/parallel.hpp"
#include "dgm/rng.hpp"
#include "dgm/triangle.hpp"

namespace dgm {

// Deterministic chain-ladder fit of a single incremental triangle: volume-
// weighted development factors, fitted incremental means via backwards
// allocation from the latest diagonal (the usual ODP-GLM equivalence), and
// a Pearson-based dispersion.
struct ChainLadderFit {
  int n = 0;
  std::vector<double> factors;   // f_j for j = 1..n-1
  std::vector<double> fitted;    // fitted incremental means m(i,j), full square
  double dispersion = 0.0;       // phi
  std::vector<double> reserves;  // per origin year, index i-1
  double total_reserve = 0.0;
  int dof = 0;                   // observed cells minus fitted parameters

  double fitted_at(int i, int j) const {
    return fitted[(static_cast<std::size_t>(i) - 1) * n + (j - 1)];
  }
};

namespace detail {

// Latest observed development year per row; rows are contiguous from j = 1.
inline std::vector<int> latest_observed(const TrianglePanel& panel, int k) {
  std::vector<int> latest(panel.n(), 0);
  for (int i = 1; i <= panel.n(); ++i) {
    int j = 0;
    while (j < panel.n() && panel.observed(i, j + 1, k)) ++j;
    latest[i - 1] = j;
  }
  return latest;
}

}  // namespace detail

inline ChainLadderFit chain_ladder(const TrianglePanel& panel, int k) {
  const int n = panel.n();
  ChainLadderFit fit;
  fit.n = n;
  fit.fitted.assign(static_cast<std::size_t>(n) * n, 0.0);
  fit.reserves.assign(n, 0.0);
  const auto latest = detail::latest_observed(panel, k);

  // cumulatives over observed cells
  std::vector<double> cum(static_cast<std::size_t>(n) * n, 0.0);
  auto C = [&](int i, int j) -> double& {
    return cum[(static_cast<std::size_t>(i) - 1) * n + (j - 1)];
  };
  for (int i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (int j = 1; j <= latest[i - 1]; ++j) {
      acc += panel.value(i, j, k);
      C(i, j) = acc;
    }
  }

  fit.factors.assign(std::max(n - 1, 0), 1.0);
  for (int j = 1; j <= n - 1; ++j) {
    double num = 0.0, den = 0.0;
    for (int i = 1; i <= n; ++i)
      if (latest[i - 1] >= j + 1) {
        num += C(i, j + 1);
        den += C(i, j);
      }
    if (den == 0.0) {
      if (num == 0.0) {
        fit.factors[j - 1] = 1.0;  // no rows reach this age; nothing to project
        continue;
      }
      throw numeric_error("chain_ladder: zero column sum at development year " +
                          std::to_string(j));
    }
    fit.factors[j - 1] = num / den;
  }

  // point reserves by recursive projection of the diagonal
  std::vector<double> proj(static_cast<std::size_t>(n) * n, 0.0);
  auto P = [&](int i, int j) -> double& {
    return proj[(static_cast<std::size_t>(i) - 1) * n + (j - 1)];
  };
  for (int i = 1; i <= n; ++i) {
    const int J = latest[i - 1];
    if (J == 0) continue;
    P(i, J) = C(i, J);
    for (int j = J + 1; j <= n; ++j) P(i, j) = P(i, j - 1) * fit.factors[j - 2];
    fit.reserves[i - 1] = P(i, n) - C(i, J);
    fit.total_reserve += fit.reserves[i - 1];
  }

  // fitted incrementals: backwards allocation inside the observed region,
  // projected differences beyond it
  for (int i = 1; i <= n; ++i) {
    const int J = latest[i - 1];
    if (J == 0) continue;
    std::vector<double> D(J + 1, 0.0);
    D[J] = C(i, J);
    for (int j = J; j >= 2; --j) D[j - 1] = D[j] / fit.factors[j - 2];
    fit.fitted[(static_cast<std::size_t>(i) - 1) * n + 0] = D[1];
    for (int j = 2; j <= J; ++j)
      fit.fitted[(static_cast<std::size_t>(i) - 1) * n + (j - 1)] = D[j] - D[j - 1];
    for (int j = J + 1; j <= n; ++j)
      fit.fitted[(static_cast<std::size_t>(i) - 1) * n + (j - 1)] = P(i, j) - P(i, j - 1);
  }

  // Pearson dispersion; a saturated fit (dof <= 0) or an exact fit means zero
  int n_obs = 0;
  double ss = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= latest[i - 1]; ++j) {
      ++n_obs;
      const double m = fit.fitted_at(i, j);
      if (m > 0.0) {
        const double r = (panel.value(i, j, k) - m) / std::sqrt(m);
        ss += r * r;
      }
    }
  fit.dof = n_obs - (2 * n - 1);
  fit.dispersion = fit.dof > 0 ? ss / fit.dof : 0.0;
  if (fit.dispersion < 1e-12) fit.dispersion = 0.0;
  return fit;
}

struct OdpDraws {
  int n = 0;
  long B = 0;
  std::vector<double> per_origin;  // B x n, draw-major
  std::vector<double> total;       // B
};

// Residual bootstrap around the chain-ladder fit: resample adjusted Pearson
// residuals onto the fitted means, refit, project, then add gamma process
// error with mean m and variance phi*m. A resample whose pseudo-triangle
// breaks the factor recursion is redrawn (capped).
inline OdpDraws odp_bootstrap(const TrianglePanel& panel, int k, long B, RngStream& rng) {
  if (B < 100) throw input_error("odp_bootstrap: need at least 100 resamples");
  const int n = panel.n();
  const ChainLadderFit fit = chain_ladder(panel, k);
  const auto latest = detail::latest_observed(panel, k);

  std::vector<double> residuals;
  const int n_obs = [&] {
    int c = 0;
    for (int i = 1; i <= n; ++i) c += latest[i - 1];
    return c;
  }();
  const double adj = fit.dof > 0 ? std::sqrt(static_cast<double>(n_obs) / fit.dof) : 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= latest[i - 1]; ++j) {
      const double m = fit.fitted_at(i, j);
      residuals.push_back(m > 0.0 ? adj * (panel.value(i, j, k) - m) / std::sqrt(m) : 0.0);
    }
  const bool noise_free = [&] {
    for (double r : residuals)
      if (r != 0.0) return false;
    return true;
  }();

  OdpDraws out;
  out.n = n;
  out.B = B;
  out.per_origin.assign(static_cast<std::size_t>(B) * n, 0.0);
  out.total.assign(B, 0.0);

  TrianglePanel pseudo = panel;
  for (long b = 0; b < B; ++b) {
    ChainLadderFit refit;
    if (noise_free) {
      refit = fit;
    } else {
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        std::size_t pos = 0;
        for (int i = 1; i <= n; ++i)
          for (int j = 1; j <= latest[i - 1]; ++j) {
            const double m = fit.fitted_at(i, j);
            const double r = residuals[static_cast<std::size_t>(
                rng.uniform() * residuals.size())];
            pseudo.set_value(i, j, k, m + r * std::sqrt(std::max(m, 0.0)));
            ++pos;
          }
        (void)pos;
        try {
          refit = chain_ladder(pseudo, k);
          ok = true;
        } catch (const numeric_error&) {
          ok = false;  // degenerate pseudo-triangle, redraw
        }
      }
      if (!ok)
        throw numeric_error("odp_bootstrap: 100 consecutive degenerate resamples");
    }
    // process error on each future incremental
    for (int i = 1; i <= n; ++i) {
      double ri = 0.0;
      for (int j = latest[i - 1] + 1; j <= n; ++j) {
        if (latest[i - 1] == 0) break;
        const double m = refit.fitted_at(i, j);
        double draw;
        if (fit.dispersion <= 0.0 || m == 0.0) {
          draw = m;
        } else {
          const double mag = std::fabs(m);
          draw = rng.gamma(mag / fit.dispersion, 1.0 / fit.dispersion);
          if (m < 0.0) draw = -draw;
        }
        ri += draw;
      }
      out.per_origin[static_cast<std::size_t>(b) * n + (i - 1)] = ri;
      out.total[b] += ri;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Side-by-side comparison
// ---------------------------------------------------------------------------

struct CompareRow {
  std::string aggregate;
  double first_median = 0.0, first_lo = 0.0, first_hi = 0.0;
  double second_median = 0.0, second_lo = 0.0, second_hi = 0.0;
  double median_diff = 0.0, width_diff = 0.0;
  std::optional<double> truth;
  std::optional<bool> first_covers, second_covers;
};

struct HistRow {
  std::string aggregate;
  double lo = 0.0, hi = 0.0;
  double first_density = 0.0, second_density = 0.0;
};

struct ComparisonResult {
  std::vector<CompareRow> rows;
  std::vector<HistRow> hist;
};

// Both sides are maps aggregate -> predictive draws on the same scale; truth,
// when supplied, adds coverage flags against the 95% equal-tailed intervals.
inline ComparisonResult compare_models(
    const std::map<std::string, std::vector<double>>& first,
    const std::map<std::string, std::vector<double>>& second,
    const std::map<std::string, double>* truth = nullptr, int hist_bins = 40) {
  ComparisonResult out;
  for (const auto& [name, draws_a] : first) {
    const auto it = second.find(name);
    if (it == second.end()) continue;
    std::vector<double> a = draws_a, b = it->second;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CompareRow row;
    row.aggregate = name;
    row.first_median = median_sorted(a);
    row.first_lo = quantile_sorted(a, 0.025);
    row.first_hi = quantile_sorted(a, 0.975);
    row.second_median = median_sorted(b);
    row.second_lo = quantile_sorted(b, 0.025);
    row.second_hi = quantile_sorted(b, 0.975);
    row.median_diff = row.first_median - row.second_median;
    row.width_diff = (row.first_hi - row.first_lo) - (row.second_hi - row.second_lo);
    if (truth) {
      const auto t = truth->find(name);
      if (t != truth->end()) {
        row.truth = t->second;
        row.first_covers = (t->second >= row.first_lo && t->second <= row.first_hi);
        row.second_covers = (t->second >= row.second_lo && t->second <= row.second_hi);
      }
    }
    out.rows.push_back(row);

    const double lo = std::min(a.front(), b.front());
    const double hi = std::max(a.back(), b.back());
    const double width = (hi - lo) > 0.0 ? (hi - lo) : 1.0;
    const double step = width / hist_bins;
    std::vector<long> ca(hist_bins, 0), cb(hist_bins, 0);
    auto bin_of = [&](double x) {
      long t = static_cast<long>((x - lo) / step);
      return std::clamp(t, 0L, static_cast<long>(hist_bins) - 1);
    };
    for (double x : a) ++ca[bin_of(x)];
    for (double x : b) ++cb[bin_of(x)];
    for (int t = 0; t < hist_bins; ++t)
      out.hist.push_back({name, lo + t * step, lo + (t + 1) * step,
                          static_cast<double>(ca[t]) / (a.size() * step),
                          static_cast<double>(cb[t]) / (b.size() * step)});
  }
  return out;
}

// Held-out reserves from the lower-triangle truth; aggregates with any
// missing cell are omitted.
inline std::map<std::string, double> heldout_reserves(const TrianglePanel& panel) {
  std::map<std::string, double> out;
  const int n = panel.n();
  bool total_ok = true;
  double total = 0.0;
  for (int k = 1; k <= panel.K(); ++k) {
    bool k_ok = true;
    double rk = 0.0;
    for (int i = 2; i <= n; ++i) {
      bool i_ok = true;
      double rik = 0.0;
      for (int j = n + 2 - i; j <= n; ++j) {
        if (!panel.present(i, j, k)) {
          i_ok = false;
          break;
        }
        rik += panel.value(i, j, k);
      }
      if (i_ok)
        out["R[i=" + std::to_string(i) + ",k=" + std::to_string(k) + "]"] = rik;
      k_ok = k_ok && i_ok;
      rk += rik;
    }
    if (k_ok) out["R[k=" + std::to_string(k) + "]"] = rk;
    total_ok = total_ok && k_ok;
    total += rk;
  }
  if (total_ok) out["R"] = total;
  return out;
}

}  // namespace dgm
