#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "dgm/math.hpp"
#include "dgm/mcmc.hpp"
#include "dgm/model.hpp"
#include "dgm/parallel.hpp"
#include "dgm/triangle.hpp"

namespace dgm {

// ---------------------------------------------------------------------------
// Augmented likelihood
// ---------------------------------------------------------------------------

// log f(x, z | theta) over observed cells: gamma density with the count-
// inflated shape and weight-inflated rate, plus the Poisson term of each
// cell's own latent count. A zero weight makes the count a point mass at
// zero, contributing nothing.
inline double augmented_loglik(const TrianglePanel& panel, const DgmParams& par, int p) {
  double ll = 0.0;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j) {
        if (!panel.observed(i, j, k)) continue;
        const double shape = par.alpha_at(i, k) + par.z_window(i, j, k, p);
        const double rate = par.beta_at(j, k) + par.gamma_window(j, k, p);
        double term = gamma_logpdf(panel.value(i, j, k), shape, rate);
        const double pois_mean = par.alpha_at(i, k) * par.gamma_at(j, k);
        if (pois_mean > 0.0)
          term += poisson_logpmf(par.z_at(i, j, k), pois_mean);
        else if (par.z_at(i, j, k) != 0)
          term = kNegInf;
        if (!std::isfinite(term))
          throw numeric_error("augmented_loglik: non-finite term at cell (i=" +
                              std::to_string(i) + ", j=" + std::to_string(j) +
                              ", k=" + std::to_string(k) + ")");
        ll += term;
      }
  return ll;
}

// -2 log f(x | theta, z) over observed cells; the deviance monitored for DIC.
inline double conditional_deviance(const TrianglePanel& panel, const DgmParams& par, int p) {
  double ll = 0.0;
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j) {
        if (!panel.observed(i, j, k)) continue;
        const double shape = par.alpha_at(i, k) + par.z_window(i, j, k, p);
        const double rate = par.beta_at(j, k) + par.gamma_window(j, k, p);
        const double term = gamma_logpdf(panel.value(i, j, k), shape, rate);
        if (!std::isfinite(term))
          throw numeric_error("deviance: non-finite term at cell (i=" + std::to_string(i) +
                              ", j=" + std::to_string(j) + ", k=" + std::to_string(k) + ")");
        ll += term;
      }
  return -2.0 * ll;
}

// log prior of all parameters and hyperparameters under the hierarchical
// gamma specification.
inline double log_prior(const DgmParams& par, const ModelSpec& spec) {
  double lp = 0.0;
  for (int k = 1; k <= par.K; ++k)
    for (int i = 1; i <= par.n; ++i)
      lp += gamma_logpdf(par.alpha_at(i, k), par.a_alpha[i - 1], par.b_alpha[i - 1]);
  for (int k = 1; k <= par.K; ++k)
    for (int j = 1; j <= par.n; ++j) {
      lp += gamma_logpdf(par.beta_at(j, k), par.a_beta[j - 1], par.b_beta[j - 1]);
      lp += gamma_logpdf(par.gamma_at(j, k), par.a_gamma[j - 1], par.b_gamma[j - 1]);
    }
  for (int t = 0; t < par.n; ++t) {
    lp += gamma_logpdf(par.a_alpha[t], spec.a_alpha0, spec.b_alpha0);
    lp += gamma_logpdf(par.b_alpha[t], spec.a_alpha0, spec.b_alpha0);
    lp += gamma_logpdf(par.a_beta[t], spec.a_beta0, spec.b_beta0);
    lp += gamma_logpdf(par.b_beta[t], spec.a_beta0, spec.b_beta0);
    lp += gamma_logpdf(par.a_gamma[t], spec.a_gamma0, spec.b_gamma0);
    lp += gamma_logpdf(par.b_gamma[t], spec.a_gamma0, spec.b_gamma0);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Full-conditional log densities
// ---------------------------------------------------------------------------
// Each evaluator returns the unnormalized log density of one coordinate with
// every other coordinate held at its value in `par`. They are derived from
// the augmented likelihood restricted to the observed cells the coordinate
// touches, plus the coordinate's prior. Masks are honoured cell by cell, so
// rows or columns without data fall back to the prior automatically.

inline double cond_alpha_logpdf(const DgmParams& par, const TrianglePanel& panel, int p,
                                int i, int k, double a) {
  if (!(a > 0.0)) return kNegInf;
  double lin = -par.b_alpha[i - 1];      // coefficient of a
  double shape_term = par.a_alpha[i - 1];  // exponent of a (plus one)
  double lgam = 0.0;
  for (int j = 1; j <= panel.n(); ++j) {
    if (!panel.observed(i, j, k)) continue;
    const double rate_j = par.beta_at(j, k) + par.gamma_window(j, k, p);
    lin += std::log(rate_j * panel.value(i, j, k)) - par.gamma_at(j, k);
    shape_term += static_cast<double>(par.z_at(i, j, k));
    lgam += std::lgamma(a + static_cast<double>(par.z_window(i, j, k, p)));
  }
  return a * lin + (shape_term - 1.0) * std::log(a) - lgam;
}

inline double cond_beta_logpdf(const DgmParams& par, const TrianglePanel& panel, int p,
                               int j, int k, double b) {
  if (!(b > 0.0)) return kNegInf;
  const double w = par.gamma_window(j, k, p);
  double exponent = 0.0;  // sum of cell shapes in column j
  double xsum = par.b_beta[j - 1];
  for (int i = 1; i <= panel.n(); ++i) {
    if (!panel.observed(i, j, k)) continue;
    exponent += par.alpha_at(i, k) + static_cast<double>(par.z_window(i, j, k, p));
    xsum += panel.value(i, j, k);
  }
  return exponent * std::log(b + w) - b * xsum + (par.a_beta[j - 1] - 1.0) * std::log(b);
}

// gamma_{j,k} enters the rate window of columns j..j+p and the Poisson mean
// of its own column. Only observed cells contribute, so each column's i-range
// shrinks as the window walks into the triangle's corner.
inline double cond_gamma_logpdf(const DgmParams& par, const TrianglePanel& panel, int p,
                                int j, int k, double g) {
  if (!(g > 0.0)) return kNegInf;
  double lp = 0.0;
  for (int r = 0; r <= p && j + r <= panel.n(); ++r) {
    const int c = j + r;
    const double rate_c = par.beta_at(c, k) + par.gamma_window_sub(c, k, p, j, g);
    const double log_rate = std::log(rate_c);
    for (int i = 1; i <= panel.n(); ++i) {
      if (!panel.observed(i, c, k)) continue;
      lp += (par.alpha_at(i, k) + static_cast<double>(par.z_window(i, c, k, p))) * log_rate -
            g * panel.value(i, c, k);
    }
  }
  double zsum = 0.0, asum = 0.0;
  for (int i = 1; i <= panel.n(); ++i) {
    if (!panel.observed(i, j, k)) continue;
    zsum += static_cast<double>(par.z_at(i, j, k));
    asum += par.alpha_at(i, k);
  }
  return lp - g * (par.b_gamma[j - 1] + asum) +
         (par.a_gamma[j - 1] + zsum - 1.0) * std::log(g);
}

// Log weight of candidate value zv for the latent count z_{i,j,k}. The count
// feeds the shape of cells (i, j..j+p); unobserved cells in that range carry
// no data and are skipped together with their x factors.
inline double cond_z_logweight(const DgmParams& par, const TrianglePanel& panel, int p,
                               int i, int j, int k, long zv) {
  if (zv < 0) return kNegInf;
  const double pois_mean = par.alpha_at(i, k) * par.gamma_at(j, k);
  double lw = static_cast<double>(zv) * std::log(pois_mean) -
              std::lgamma(static_cast<double>(zv) + 1.0);
  for (int r = 0; r <= p && j + r <= panel.n(); ++r) {
    const int c = j + r;
    if (!panel.observed(i, c, k)) continue;
    const double rate_c = par.beta_at(c, k) + par.gamma_window(c, k, p);
    lw += static_cast<double>(zv) * std::log(rate_c * panel.value(i, c, k));
    lw -= std::lgamma(par.alpha_at(i, k) +
                      static_cast<double>(par.z_window_sub(i, c, k, p, j, zv)));
  }
  return lw;
}

enum class HyperGroup { alpha, beta, gamma };

// Shape hyperparameter conditional for one index of one group: the K gamma
// prior normalizers (b^a / Gamma(a))^K, the product of the group's K
// parameter values raised to a, and the hyperprior.
inline double cond_hyper_shape_logpdf(const DgmParams& par, const ModelSpec& spec,
                                      HyperGroup grp, int idx, double a) {
  if (!(a > 0.0)) return kNegInf;
  double b = 0.0, a0 = 0.0, b0 = 0.0, logprod = 0.0;
  switch (grp) {
    case HyperGroup::alpha:
      b = par.b_alpha[idx - 1];
      a0 = spec.a_alpha0;
      b0 = spec.b_alpha0;
      for (int k = 1; k <= par.K; ++k) logprod += std::log(par.alpha_at(idx, k));
      break;
    case HyperGroup::beta:
      b = par.b_beta[idx - 1];
      a0 = spec.a_beta0;
      b0 = spec.b_beta0;
      for (int k = 1; k <= par.K; ++k) logprod += std::log(par.beta_at(idx, k));
      break;
    case HyperGroup::gamma:
      b = par.b_gamma[idx - 1];
      a0 = spec.a_gamma0;
      b0 = spec.b_gamma0;
      for (int k = 1; k <= par.K; ++k) logprod += std::log(par.gamma_at(idx, k));
      break;
  }
  const double Kd = static_cast<double>(par.K);
  return Kd * a * std::log(b) - Kd * std::lgamma(a) + a * logprod +
         (a0 - 1.0) * std::log(a) - b0 * a;
}

// The rate hyperparameter is conjugate: collecting b^(K a) e^{-b sum} against
// its Ga(a0, b0) hyperprior gives Ga(a0 + K a, b0 + sum of the K parameters).
inline std::pair<double, double> hyper_rate_posterior(double a0, double b0, int K,
                                                      double shape_hyper, double param_sum) {
  return {a0 + static_cast<double>(K) * shape_hyper, b0 + param_sum};
}

// ---------------------------------------------------------------------------
// One-coordinate draws
// ---------------------------------------------------------------------------

struct GibbsState {
  DgmParams params;
  long iteration = 0;
  RngStream rng;
  double slice_width = 1.0;
  double tail_tol = 1e-12;

  GibbsState(DgmParams par, RngStream stream)
      : params(std::move(par)), rng(std::move(stream)) {}
};

inline double cond_alpha(int i, int k, GibbsState& st, const TrianglePanel& panel, int p) {
  const auto& par = st.params;
  return slice_sample(
      [&](double a) { return cond_alpha_logpdf(par, panel, p, i, k, a); },
      par.alpha_at(i, k), st.slice_width, st.rng);
}

inline double cond_beta(int j, int k, GibbsState& st, const TrianglePanel& panel, int p) {
  const auto& par = st.params;
  return slice_sample(
      [&](double b) { return cond_beta_logpdf(par, panel, p, j, k, b); },
      par.beta_at(j, k), st.slice_width, st.rng);
}

inline double cond_gamma(int j, int k, GibbsState& st, const TrianglePanel& panel, int p) {
  const auto& par = st.params;
  return slice_sample(
      [&](double g) { return cond_gamma_logpdf(par, panel, p, j, k, g); },
      par.gamma_at(j, k), st.slice_width, st.rng);
}

inline long cond_z(int i, int j, int k, GibbsState& st, const TrianglePanel& panel, int p) {
  const auto& par = st.params;
  if (par.gamma_at(j, k) == 0.0) return 0;  // degenerate Poisson, no draw needed
  return discrete_sample(
      [&](long zv) { return cond_z_logweight(par, panel, p, i, j, k, zv); },
      st.rng, st.tail_tol);
}

inline double cond_hyper_shape(HyperGroup grp, int idx, GibbsState& st,
                               const ModelSpec& spec) {
  const auto& par = st.params;
  double current = 0.0;
  switch (grp) {
    case HyperGroup::alpha: current = par.a_alpha[idx - 1]; break;
    case HyperGroup::beta: current = par.a_beta[idx - 1]; break;
    case HyperGroup::gamma: current = par.a_gamma[idx - 1]; break;
  }
  return slice_sample(
      [&](double a) { return cond_hyper_shape_logpdf(par, spec, grp, idx, a); },
      current, st.slice_width, st.rng);
}

inline double cond_hyper_rate(HyperGroup grp, int idx, GibbsState& st,
                              const ModelSpec& spec) {
  const auto& par = st.params;
  double a0 = 0.0, b0 = 0.0, shape_hyper = 0.0, param_sum = 0.0;
  switch (grp) {
    case HyperGroup::alpha:
      a0 = spec.a_alpha0;
      b0 = spec.b_alpha0;
      shape_hyper = par.a_alpha[idx - 1];
      for (int k = 1; k <= par.K; ++k) param_sum += par.alpha_at(idx, k);
      break;
    case HyperGroup::beta:
      a0 = spec.a_beta0;
      b0 = spec.b_beta0;
      shape_hyper = par.a_beta[idx - 1];
      for (int k = 1; k <= par.K; ++k) param_sum += par.beta_at(idx, k);
      break;
    case HyperGroup::gamma:
      a0 = spec.a_gamma0;
      b0 = spec.b_gamma0;
      shape_hyper = par.a_gamma[idx - 1];
      for (int k = 1; k <= par.K; ++k) param_sum += par.gamma_at(idx, k);
      break;
  }
  auto [shape, rate] = hyper_rate_posterior(a0, b0, par.K, shape_hyper, param_sum);
  return st.rng.gamma(shape, rate);
}

// ---------------------------------------------------------------------------
// Sweep and chains
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
auto with_context(Fn&& fn, const std::string& what) {
  try {
    return fn();
  } catch (const numeric_error& e) {
    throw numeric_error(what + ": " + e.what());
  }
}

}  // namespace detail

// One full scan in fixed order: latent counts, alpha, beta, gamma, then the
// hyperparameter shapes and rates.
inline void gibbs_sweep(GibbsState& st, const TrianglePanel& panel, const ModelSpec& spec) {
  const int n = panel.n();
  const int K = panel.K();
  const int p = spec.p;
  auto& par = st.params;
  for (int k = 1; k <= K; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        if (!panel.observed(i, j, k)) continue;
        par.z[par.ijk(i, j, k)] = detail::with_context(
            [&] { return cond_z(i, j, k, st, panel, p); },
            "cond_z (i=" + std::to_string(i) + ", j=" + std::to_string(j) +
                ", k=" + std::to_string(k) + ")");
      }
  for (int k = 1; k <= K; ++k)
    for (int i = 1; i <= n; ++i)
      par.alpha[par.ik(i, k)] = detail::with_context(
          [&] { return cond_alpha(i, k, st, panel, p); },
          "cond_alpha (i=" + std::to_string(i) + ", k=" + std::to_string(k) + ")");
  for (int k = 1; k <= K; ++k)
    for (int j = 1; j <= n; ++j)
      par.beta[par.jk(j, k)] = detail::with_context(
          [&] { return cond_beta(j, k, st, panel, p); },
          "cond_beta (j=" + std::to_string(j) + ", k=" + std::to_string(k) + ")");
  for (int k = 1; k <= K; ++k)
    for (int j = 1; j <= n; ++j)
      par.gamma[par.jk(j, k)] = detail::with_context(
          [&] { return cond_gamma(j, k, st, panel, p); },
          "cond_gamma (j=" + std::to_string(j) + ", k=" + std::to_string(k) + ")");
  for (int i = 1; i <= n; ++i) {
    par.a_alpha[i - 1] = detail::with_context(
        [&] { return cond_hyper_shape(HyperGroup::alpha, i, st, spec); },
        "cond_hyper_shape alpha (i=" + std::to_string(i) + ")");
    par.b_alpha[i - 1] = cond_hyper_rate(HyperGroup::alpha, i, st, spec);
  }
  for (int j = 1; j <= n; ++j) {
    par.a_beta[j - 1] = detail::with_context(
        [&] { return cond_hyper_shape(HyperGroup::beta, j, st, spec); },
        "cond_hyper_shape beta (j=" + std::to_string(j) + ")");
    par.b_beta[j - 1] = cond_hyper_rate(HyperGroup::beta, j, st, spec);
    par.a_gamma[j - 1] = detail::with_context(
        [&] { return cond_hyper_shape(HyperGroup::gamma, j, st, spec); },
        "cond_hyper_shape gamma (j=" + std::to_string(j) + ")");
    par.b_gamma[j - 1] = cond_hyper_rate(HyperGroup::gamma, j, st, spec);
  }
  ++st.iteration;
}

// Method-of-moments start for alpha and beta, prior means elsewhere, z = 0.
inline DgmParams initial_state(const TrianglePanel& panel, const ModelSpec& spec) {
  const int n = panel.n();
  const int K = panel.K();
  DgmParams par(n, K);
  for (int k = 1; k <= K; ++k) {
    std::vector<double> row_mean(n, 1.0);
    double level = 0.0;
    for (int i = 1; i <= n; ++i) {
      double s = 0.0;
      int c = 0;
      for (int j = 1; j <= n; ++j)
        if (panel.observed(i, j, k)) {
          s += panel.value(i, j, k);
          ++c;
        }
      row_mean[i - 1] = c > 0 ? std::max(s / c, 1e-6) : 1.0;
      level += row_mean[i - 1];
    }
    level /= n;
    for (int i = 1; i <= n; ++i) par.alpha[par.ik(i, k)] = row_mean[i - 1];
    for (int j = 1; j <= n; ++j) {
      double s = 0.0;
      int c = 0;
      for (int i = 1; i <= n; ++i)
        if (panel.observed(i, j, k)) {
          s += panel.value(i, j, k);
          ++c;
        }
      const double col_mean = c > 0 ? std::max(s / c, 1e-6) : level;
      par.beta[par.jk(j, k)] = std::max(level / col_mean, 1e-6);
      par.gamma[par.jk(j, k)] = spec.a_gamma0 / spec.b_gamma0;
    }
  }
  std::fill(par.a_alpha.begin(), par.a_alpha.end(), spec.a_alpha0 / spec.b_alpha0);
  std::fill(par.b_alpha.begin(), par.b_alpha.end(), spec.a_alpha0 / spec.b_alpha0);
  std::fill(par.a_beta.begin(), par.a_beta.end(), spec.a_beta0 / spec.b_beta0);
  std::fill(par.b_beta.begin(), par.b_beta.end(), spec.a_beta0 / spec.b_beta0);
  std::fill(par.a_gamma.begin(), par.a_gamma.end(), spec.a_gamma0 / spec.b_gamma0);
  std::fill(par.b_gamma.begin(), par.b_gamma.end(), spec.a_gamma0 / spec.b_gamma0);
  return par;
}

// A draw of the full parameter state from the hierarchical prior.
inline DgmParams draw_prior(int n, int K, const ModelSpec& spec, RngStream& rng) {
  DgmParams par(n, K);
  for (int t = 0; t < n; ++t) {
    par.a_alpha[t] = rng.gamma(spec.a_alpha0, spec.b_alpha0);
    par.b_alpha[t] = rng.gamma(spec.a_alpha0, spec.b_alpha0);
    par.a_beta[t] = rng.gamma(spec.a_beta0, spec.b_beta0);
    par.b_beta[t] = rng.gamma(spec.a_beta0, spec.b_beta0);
    par.a_gamma[t] = rng.gamma(spec.a_gamma0, spec.b_gamma0);
    par.b_gamma[t] = rng.gamma(spec.a_gamma0, spec.b_gamma0);
  }
  for (int k = 1; k <= K; ++k)
    for (int i = 1; i <= n; ++i)
      par.alpha[par.ik(i, k)] = rng.gamma(par.a_alpha[i - 1], par.b_alpha[i - 1]);
  for (int k = 1; k <= K; ++k)
    for (int j = 1; j <= n; ++j) {
      par.beta[par.jk(j, k)] = rng.gamma(par.a_beta[j - 1], par.b_beta[j - 1]);
      par.gamma[par.jk(j, k)] = rng.gamma(par.a_gamma[j - 1], par.b_gamma[j - 1]);
    }
  return par;
}

// Thinned kept draws of every parameter block, one array per chain, plus the
// per-draw conditional deviance.
struct PosteriorSamples {
  int n = 0, K = 0;
  ModelSpec spec;
  RunConfig run;
  std::vector<CellRef> z_cells;  // observed cells, storage order of z draws
  // [chain] -> keep * block_size, draw-major
  std::vector<std::vector<double>> alpha, beta, gamma;                    // block n*K
  std::vector<std::vector<double>> a_alpha, b_alpha, a_beta, b_beta;      // block n
  std::vector<std::vector<double>> a_gamma, b_gamma;                      // block n
  std::vector<std::vector<long>> z;                                       // block z_cells.size()
  std::vector<std::vector<double>> deviance;                              // block 1
  double wall_seconds = 0.0;

  int chains() const { return static_cast<int>(alpha.size()); }
  long keep() const { return run.keep; }
  long total_draws() const { return static_cast<long>(chains()) * run.keep; }

  // Rebuilds the full parameter state of one kept draw (z cube included).
  DgmParams params_at(int chain, long draw) const {
    DgmParams par(n, K);
    const std::size_t nk = static_cast<std::size_t>(n) * K;
    const std::size_t base_nk = static_cast<std::size_t>(draw) * nk;
    const std::size_t base_n = static_cast<std::size_t>(draw) * n;
    for (std::size_t t = 0; t < nk; ++t) {
      par.alpha[t] = alpha[chain][base_nk + t];
      par.beta[t] = beta[chain][base_nk + t];
      par.gamma[t] = gamma[chain][base_nk + t];
    }
    for (int t = 0; t < n; ++t) {
      par.a_alpha[t] = a_alpha[chain][base_n + t];
      par.b_alpha[t] = b_alpha[chain][base_n + t];
      par.a_beta[t] = a_beta[chain][base_n + t];
      par.b_beta[t] = b_beta[chain][base_n + t];
      par.a_gamma[t] = a_gamma[chain][base_n + t];
      par.b_gamma[t] = b_gamma[chain][base_n + t];
    }
    const std::size_t zb = static_cast<std::size_t>(draw) * z_cells.size();
    for (std::size_t c = 0; c < z_cells.size(); ++c) {
      const auto& cell = z_cells[c];
      par.z[par.ijk(cell.i, cell.j, cell.k)] = z[chain][zb + c];
    }
    return par;
  }

  // Flattens one scalar's kept draws, one vector per chain.
  std::vector<std::vector<double>> scalar_chains(const std::vector<std::vector<double>>& block,
                                                 std::size_t block_size,
                                                 std::size_t offset) const {
    std::vector<std::vector<double>> out(chains());
    for (int c = 0; c < chains(); ++c) {
      out[c].resize(run.keep);
      for (long m = 0; m < run.keep; ++m)
        out[c][m] = block[c][static_cast<std::size_t>(m) * block_size + offset];
    }
    return out;
  }
};

namespace detail {

inline void check_state_invariants(const DgmParams& par) {
  for (double v : par.alpha)
    if (!(v > 0.0)) throw numeric_error("state invariant violated: alpha <= 0");
  for (double v : par.beta)
    if (!(v > 0.0)) throw numeric_error("state invariant violated: beta <= 0");
  for (double v : par.gamma)
    if (!(v >= 0.0)) throw numeric_error("state invariant violated: gamma < 0");
  for (long v : par.z)
    if (v < 0) throw numeric_error("state invariant violated: z < 0");
  for (const auto* h : {&par.a_alpha, &par.b_alpha, &par.a_beta, &par.b_beta,
                        &par.a_gamma, &par.b_gamma})
    for (double v : *h)
      if (!(v > 0.0)) throw numeric_error("state invariant violated: hyperparameter <= 0");
}

}  // namespace detail

// Runs the configured number of chains (in parallel, one RNG stream per
// chain), discards burn_in sweeps, then keeps every thin-th of keep*thin
// further sweeps. Deterministic for a fixed (panel, spec, run).
inline PosteriorSamples run_chains(const TrianglePanel& panel, const ModelSpec& spec,
                                   const RunConfig& run) {
  spec.validate(panel.n());
  run.validate();
  for (int k = 1; k <= panel.K(); ++k)
    for (int i = 1; i <= panel.n(); ++i)
      for (int j = 1; j <= panel.n(); ++j)
        if (panel.observed(i, j, k) && !(panel.value(i, j, k) > 0.0))
          throw input_error("observed cell (i=" + std::to_string(i) + ", j=" +
                            std::to_string(j) + ", k=" + std::to_string(k) +
                            ") is not positive; apply the zero floor first");

  const auto t0 = std::chrono::steady_clock::now();
  PosteriorSamples out;
  out.n = panel.n();
  out.K = panel.K();
  out.spec = spec;
  out.run = run;
  out.z_cells = observed_cells(panel);
  const std::size_t nk = static_cast<std::size_t>(out.n) * out.K;
  const std::size_t nz = out.z_cells.size();
  const auto keep = static_cast<std::size_t>(run.keep);
  auto alloc = [&](std::vector<std::vector<double>>& v, std::size_t block) {
    v.assign(run.chains, std::vector<double>(keep * block));
  };
  alloc(out.alpha, nk);
  alloc(out.beta, nk);
  alloc(out.gamma, nk);
  alloc(out.a_alpha, out.n);
  alloc(out.b_alpha, out.n);
  alloc(out.a_beta, out.n);
  alloc(out.b_beta, out.n);
  alloc(out.a_gamma, out.n);
  alloc(out.b_gamma, out.n);
  alloc(out.deviance, 1);
  out.z.assign(run.chains, std::vector<long>(keep * nz));

  parallel_for(run.chains, run.threads, [&](long chain) {
    GibbsState st(initial_state(panel, spec), RngStream(run.seed, static_cast<std::uint64_t>(chain) + 1));
    st.slice_width = run.slice_width;
    st.tail_tol = run.tail_tol;
    for (long it = 0; it < run.burn_in; ++it) gibbs_sweep(st, panel, spec);
    for (long m = 0; m < run.keep; ++m) {
      for (int t = 0; t < run.thin; ++t) gibbs_sweep(st, panel, spec);
      const auto& par = st.params;
      detail::check_state_invariants(par);
      const std::size_t base_nk = static_cast<std::size_t>(m) * nk;
      const std::size_t base_n = static_cast<std::size_t>(m) * out.n;
      for (std::size_t t = 0; t < nk; ++t) {
        out.alpha[chain][base_nk + t] = par.alpha[t];
        out.beta[chain][base_nk + t] = par.beta[t];
        out.gamma[chain][base_nk + t] = par.gamma[t];
      }
      for (int t = 0; t < out.n; ++t) {
        out.a_alpha[chain][base_n + t] = par.a_alpha[t];
        out.b_alpha[chain][base_n + t] = par.b_alpha[t];
        out.a_beta[chain][base_n + t] = par.a_beta[t];
        out.b_beta[chain][base_n + t] = par.b_beta[t];
        out.a_gamma[chain][base_n + t] = par.a_gamma[t];
        out.b_gamma[chain][base_n + t] = par.b_gamma[t];
      }
      const std::size_t zb = static_cast<std::size_t>(m) * nz;
      for (std::size_t c = 0; c < nz; ++c) {
        const auto& cell = out.z_cells[c];
        out.z[chain][zb + c] = par.z_at(cell.i, cell.j, cell.k);
      }
      out.deviance[chain][m] = conditional_deviance(panel, par, spec.p);
    }
  });
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace dgm
