#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dgm/rng.hpp"
#include "dgm/triangle.hpp"

namespace dgm {

// Full parameter state of the dependent gamma model: per-origin levels
// alpha_{i,k}, per-development rates beta_{j,k}, dependence weights
// gamma_{j,k}, latent counts z_{i,j,k}, and the per-index hyperparameters of
// their gamma priors. Accessors clamp non-positive development indices to
// zero weight / zero count, which is the model's boundary convention.
struct DgmParams {
  int n = 0, K = 0;
  std::vector<double> alpha;  // index ik(i,k)
  std::vector<double> beta;   // index jk(j,k)
  std::vector<double> gamma;  // index jk(j,k)
  std::vector<long> z;        // index ijk(i,j,k); nonzero only at observed cells
  std::vector<double> a_alpha, b_alpha;  // per origin year i
  std::vector<double> a_beta, b_beta;    // per development year j
  std::vector<double> a_gamma, b_gamma;  // per development year j

  DgmParams() = default;
  DgmParams(int n_, int K_)
      : n(n_),
        K(K_),
        alpha(static_cast<std::size_t>(n_) * K_, 1.0),
        beta(static_cast<std::size_t>(n_) * K_, 1.0),
        gamma(static_cast<std::size_t>(n_) * K_, 0.0),
        z(static_cast<std::size_t>(n_) * n_ * K_, 0),
        a_alpha(n_, 1.0),
        b_alpha(n_, 1.0),
        a_beta(n_, 1.0),
        b_beta(n_, 1.0),
        a_gamma(n_, 1.0),
        b_gamma(n_, 1.0) {}

  std::size_t ik(int i, int k) const {
    return (static_cast<std::size_t>(k) - 1) * n + (static_cast<std::size_t>(i) - 1);
  }
  std::size_t jk(int j, int k) const {
    return (static_cast<std::size_t>(k) - 1) * n + (static_cast<std::size_t>(j) - 1);
  }
  std::size_t ijk(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) - 1) * n * n +
           (static_cast<std::size_t>(i) - 1) * n + (static_cast<std::size_t>(j) - 1);
  }

  double alpha_at(int i, int k) const { return alpha[ik(i, k)]; }
  double beta_at(int j, int k) const { return beta[jk(j, k)]; }
  double gamma_at(int j, int k) const { return j < 1 ? 0.0 : gamma[jk(j, k)]; }
  long z_at(int i, int j, int k) const { return j < 1 ? 0 : z[ijk(i, j, k)]; }

  // sum_{l=0..p} gamma_{j-l,k}
  double gamma_window(int j, int k, int p) const {
    double s = 0.0;
    for (int l = 0; l <= p; ++l) s += gamma_at(j - l, k);
    return s;
  }

  // sum_{l=0..p} z_{i,j-l,k}
  long z_window(int i, int j, int k, int p) const {
    long s = 0;
    for (int l = 0; l <= p; ++l) s += z_at(i, j - l, k);
    return s;
  }

  // Window sums with one coordinate substituted, for conditional evaluation.
  double gamma_window_sub(int j, int k, int p, int jsub, double g) const {
    double s = 0.0;
    for (int l = 0; l <= p; ++l) {
      const int jj = j - l;
      if (jj < 1) continue;
      s += (jj == jsub) ? g : gamma[jk(jj, k)];
    }
    return s;
  }
  long z_window_sub(int i, int j, int k, int p, int jsub, long zv) const {
    long s = 0;
    for (int l = 0; l <= p; ++l) {
      const int jj = j - l;
      if (jj < 1) continue;
      s += (jj == jsub) ? zv : z[ijk(i, jj, k)];
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Closed-form moments
// ---------------------------------------------------------------------------

inline double cell_mean(const DgmParams& par, int p, int i, int j, int k) {
  const double w = par.gamma_window(j, k, p);
  return par.alpha_at(i, k) * (1.0 + w) / (par.beta_at(j, k) + w);
}

inline double cell_variance(const DgmParams& par, int p, int i, int j, int k) {
  const double w = par.gamma_window(j, k, p);
  const double denom = par.beta_at(j, k) + w;
  return par.alpha_at(i, k) * (1.0 + 2.0 * w) / (denom * denom);
}

// Same-origin covariance across a lag of s development years; the shared
// latent counts contribute sum_{l=0..p-s} gamma_{j-l,k}. Zero beyond the
// dependence order (and across origins or businesses by construction).
inline double cell_covariance(const DgmParams& par, int p, int i, int j, int s, int k) {
  if (s < 1) throw std::invalid_argument("cell_covariance: lag s must be >= 1");
  if (s > p) return 0.0;
  double shared = 0.0;
  for (int l = 0; l <= p - s; ++l) shared += par.gamma_at(j - l, k);
  const double d1 = par.beta_at(j, k) + par.gamma_window(j, k, p);
  const double d2 = par.beta_at(j + s, k) + par.gamma_window(j + s, k, p);
  return par.alpha_at(i, k) * shared / (d1 * d2);
}

// Correlation between development years j and j+s for one business. Depends
// on the gamma column alone, so it takes just that column (1-based j maps to
// gamma_col[j-1]).
inline double dev_correlation(const std::vector<double>& gamma_col, int p, int j, int s) {
  if (s < 1 || s > p)
    throw std::invalid_argument("dev_correlation: lag s must satisfy 1 <= s <= p");
  if (j < 1 || j + s > static_cast<int>(gamma_col.size()))
    throw std::invalid_argument("dev_correlation: development index out of range");
  auto window = [&](int jj) {
    double w = 0.0;
    for (int l = 0; l <= p; ++l)
      if (jj - l >= 1) w += gamma_col[jj - l - 1];
    return w;
  };
  double shared = 0.0;
  for (int l = 0; l <= p - s; ++l)
    if (j - l >= 1) shared += gamma_col[j - l - 1];
  return shared / (std::sqrt(1.0 + 2.0 * window(j)) * std::sqrt(1.0 + 2.0 * window(j + s)));
}

// ---------------------------------------------------------------------------
// Identifiable reparametrisation
// ---------------------------------------------------------------------------

// alpha_star_{i,k}: expected ultimate total for origin year i; pi_star_{j,k}:
// share of that ultimate expected in development year j; corr: the lagged
// development-year correlations up to the dependence order.
struct MomentReport {
  int n = 0, K = 0, p = 0;
  std::vector<double> mu;          // cell means, same layout as DgmParams::z
  std::vector<double> alpha_star;  // ik layout
  std::vector<double> pi_star;     // jk layout
  struct Corr {
    int j, s, k;
    double rho;
  };
  std::vector<Corr> corr;
};

inline MomentReport identifiable_params(const DgmParams& par, int p) {
  MomentReport rep;
  rep.n = par.n;
  rep.K = par.K;
  rep.p = p;
  rep.mu.resize(static_cast<std::size_t>(par.n) * par.n * par.K);
  rep.alpha_star.resize(static_cast<std::size_t>(par.n) * par.K);
  rep.pi_star.resize(static_cast<std::size_t>(par.n) * par.K);
  for (int k = 1; k <= par.K; ++k) {
    std::vector<double> pi(par.n);
    double total = 0.0;
    for (int j = 1; j <= par.n; ++j) {
      const double w = par.gamma_window(j, k, p);
      pi[j - 1] = (1.0 + w) / (par.beta_at(j, k) + w);
      total += pi[j - 1];
    }
    for (int j = 1; j <= par.n; ++j) rep.pi_star[par.jk(j, k)] = pi[j - 1] / total;
    for (int i = 1; i <= par.n; ++i) {
      rep.alpha_star[par.ik(i, k)] = par.alpha_at(i, k) * total;
      for (int j = 1; j <= par.n; ++j)
        rep.mu[par.ijk(i, j, k)] = par.alpha_at(i, k) * pi[j - 1];
    }
    std::vector<double> gcol(par.n);
    for (int j = 1; j <= par.n; ++j) gcol[j - 1] = par.gamma_at(j, k);
    for (int s = 1; s <= p; ++s)
      for (int j = 1; j + s <= par.n; ++j)
        rep.corr.push_back({j, s, k, dev_correlation(gcol, p, j, s)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Forward simulation
// ---------------------------------------------------------------------------

struct SimulatedPanel {
  TrianglePanel panel;  // full square, calibration mask
  std::vector<long> z;  // latent counts, DgmParams::z layout
};

// Exact draw of the full n x n x K square from the generative model: latent
// counts first (column by column so AR windows are available), then the
// gamma observation given the window sums.
inline SimulatedPanel simulate_panel(const DgmParams& par, int p, int n, int K,
                                     RngStream& rng) {
  if (par.n != n || par.K != K)
    throw std::invalid_argument("simulate_panel: parameter dimensions disagree");
  SimulatedPanel out{TrianglePanel(n, K), std::vector<long>()};
  DgmParams work = par;
  std::fill(work.z.begin(), work.z.end(), 0L);
  for (int k = 1; k <= K; ++k)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        const long zv = rng.poisson(par.alpha_at(i, k) * par.gamma_at(j, k));
        work.z[work.ijk(i, j, k)] = zv;
        const double shape = par.alpha_at(i, k) + work.z_window(i, j, k, p);
        const double rate = par.beta_at(j, k) + par.gamma_window(j, k, p);
        out.panel.set_cell(i, j, k, rng.gamma(shape, rate), j <= n + 1 - i);
      }
  out.z = std::move(work.z);
  return out;
}

}  // namespace dgm
