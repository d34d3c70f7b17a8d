#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dgm/gibbs.hpp"
#include "dgm/math.hpp"
#include "dgm/mcmc.hpp"
#include "dgm/model.hpp"
#include "dgm/parallel.hpp"
#include "dgm/triangle.hpp"

namespace dgm {

namespace detail {
// Stream salts so predictive, replicate and bootstrap draws never share a
// substream with the chains themselves.
inline constexpr std::uint64_t kPredictSalt = 0x7064726177ULL;
inline constexpr std::uint64_t kReplicateSalt = 0x7265706472ULL;
}  // namespace detail

// Posterior predictive simulation of every unobserved cell, one simulated
// lower triangle per kept draw, with per-draw reserve aggregates.
struct PredictiveDraws {
  int n = 0, K = 0;
  long M = 0;  // pooled kept draws across chains
  bool original_scale = false;
  std::vector<CellRef> cells;        // unobserved cells, j ascending within (k, i)
  std::vector<double> cell_draws;    // M x cells.size(), draw-major
  std::vector<double> reserve_ik;    // M x (n*K), index (k-1)*n + (i-1)
  std::vector<double> reserve_k;     // M x K
  std::vector<double> reserve_total; // M

  double cell_draw(long m, std::size_t c) const { return cell_draws[m * cells.size() + c]; }
};

// For each kept draw: future latent counts are unconstrained by data, so each
// is drawn fresh from its Poisson given (alpha, gamma); the cell value then
// draws from the gamma whose shape window mixes posterior counts (observed
// cells) with those fresh counts. Cells are visited with j ascending so the
// window is always filled. With original_scale the per-cell draws are mapped
// back through the transform before aggregation, which keeps the predictive
// uncertainty intact on the money scale.
inline PredictiveDraws predictive_draws(const PosteriorSamples& s, const TrianglePanel& panel,
                                        const ModelSpec& spec, bool original_scale,
                                        int threads = 0) {
  if (panel.n() != s.n || panel.K() != s.K)
    throw input_error("predictive_draws: panel and samples dimensions disagree");
  PredictiveDraws out;
  out.n = s.n;
  out.K = s.K;
  out.M = s.total_draws();
  out.original_scale = original_scale && spec.transform.enabled;
  out.cells = unobserved_cells(panel);
  out.cell_draws.assign(static_cast<std::size_t>(out.M) * out.cells.size(), 0.0);
  out.reserve_ik.assign(static_cast<std::size_t>(out.M) * s.n * s.K, 0.0);
  out.reserve_k.assign(static_cast<std::size_t>(out.M) * s.K, 0.0);
  out.reserve_total.assign(out.M, 0.0);

  const RngStream base(s.run.seed, detail::kPredictSalt);
  const int p = spec.p;
  parallel_for(out.M, threads, [&](long m) {
    const int chain = static_cast<int>(m / s.run.keep);
    const long draw = m % s.run.keep;
    DgmParams par = s.params_at(chain, draw);
    RngStream rng = base.substream(static_cast<std::uint64_t>(m));
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
      const auto& cell = out.cells[c];
      const long zhat = rng.poisson(par.alpha_at(cell.i, cell.k) * par.gamma_at(cell.j, cell.k));
      par.z[par.ijk(cell.i, cell.j, cell.k)] = zhat;
      const double shape =
          par.alpha_at(cell.i, cell.k) + par.z_window(cell.i, cell.j, cell.k, p);
      const double rate =
          par.beta_at(cell.j, cell.k) + par.gamma_window(cell.j, cell.k, p);
      double x = rng.gamma(shape, rate);
      if (out.original_scale) x = invert_transform(x, spec.transform);
      out.cell_draws[m * out.cells.size() + c] = x;
      out.reserve_ik[static_cast<std::size_t>(m) * s.n * s.K + par.ik(cell.i, cell.k)] += x;
      out.reserve_k[static_cast<std::size_t>(m) * s.K + (cell.k - 1)] += x;
      out.reserve_total[m] += x;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reserve risk summary
// ---------------------------------------------------------------------------

// Empirical quantile (inverse CDF on the sorted draws).
inline double value_at_risk(const std::vector<double>& sorted, double q) {
  return quantile_sorted(sorted, q);
}

// Tail mean from the VaR order statistic to the top.
inline double expected_shortfall(const std::vector<double>& sorted, double q) {
  const long N = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(q * static_cast<double>(N) - 1e-9)) - 1;
  idx = std::clamp(idx, 0L, N - 1);
  double s = 0.0;
  for (long t = idx; t < N; ++t) s += sorted[t];
  return s / static_cast<double>(N - idx);
}

struct AggregateStats {
  std::string aggregate;  // "R", "R[k=..]" or "R[i=..,k=..]"
  double mean = 0.0, median = 0.0;
  double eq_lo = 0.0, eq_hi = 0.0;    // equal-tailed 95%
  double hpd_lo = 0.0, hpd_hi = 0.0;  // 95% HPD
  std::vector<double> var_q, es_q;    // parallel to ReserveSummary::levels
};

struct ReserveSummary {
  bool original_scale = false;
  std::vector<double> levels;
  std::vector<AggregateStats> rows;
};

inline std::string aggregate_name(int i, int k) {
  if (i == 0 && k == 0) return "R";
  if (i == 0) return "R[k=" + std::to_string(k) + "]";
  return "R[i=" + std::to_string(i) + ",k=" + std::to_string(k) + "]";
}

namespace detail {

inline AggregateStats aggregate_stats(const std::string& name, std::vector<double> draws,
                                      const std::vector<double>& levels) {
  std::sort(draws.begin(), draws.end());
  AggregateStats st;
  st.aggregate = name;
  st.mean = dgm::mean(draws);
  st.median = median_sorted(draws);
  st.eq_lo = quantile_sorted(draws, 0.025);
  st.eq_hi = quantile_sorted(draws, 0.975);
  const auto hpd = hpd_interval(draws, 0.95);
  st.hpd_lo = hpd.first;
  st.hpd_hi = hpd.second;
  for (double q : levels) {
    st.var_q.push_back(value_at_risk(draws, q));
    st.es_q.push_back(expected_shortfall(draws, q));
  }
  return st;
}

}  // namespace detail

inline ReserveSummary reserve_summary(const PredictiveDraws& draws,
                                      const std::vector<double>& levels = {0.995, 0.99}) {
  if (draws.M < 100) throw input_error("reserve_summary: need at least 100 draws");
  ReserveSummary out;
  out.original_scale = draws.original_scale;
  out.levels = levels;
  std::vector<double> v(draws.M);
  for (long m = 0; m < draws.M; ++m) v[m] = draws.reserve_total[m];
  out.rows.push_back(detail::aggregate_stats(aggregate_name(0, 0), v, levels));
  for (int k = 1; k <= draws.K; ++k) {
    for (long m = 0; m < draws.M; ++m)
      v[m] = draws.reserve_k[static_cast<std::size_t>(m) * draws.K + (k - 1)];
    out.rows.push_back(detail::aggregate_stats(aggregate_name(0, k), v, levels));
  }
  for (int k = 1; k <= draws.K; ++k)
    for (int i = 2; i <= draws.n; ++i) {
      for (long m = 0; m < draws.M; ++m)
        v[m] = draws.reserve_ik[static_cast<std::size_t>(m) * draws.n * draws.K +
                                (static_cast<std::size_t>(k) - 1) * draws.n + (i - 1)];
      out.rows.push_back(detail::aggregate_stats(aggregate_name(i, k), v, levels));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Model selection scores
// ---------------------------------------------------------------------------

// DIC = 2 * mean deviance - deviance at the plug-in (posterior means of the
// continuous parameters, per-cell posterior mean of z rounded to an integer).
inline double dic(const PosteriorSamples& s, const TrianglePanel& panel,
                  const ModelSpec& spec) {
  const long M = s.total_draws();
  double dbar = 0.0;
  for (const auto& chain : s.deviance)
    for (double d : chain) dbar += d;
  dbar /= static_cast<double>(M);

  DgmParams plug(s.n, s.K);
  std::fill(plug.alpha.begin(), plug.alpha.end(), 0.0);
  std::fill(plug.beta.begin(), plug.beta.end(), 0.0);
  std::fill(plug.gamma.begin(), plug.gamma.end(), 0.0);
  std::vector<double> zbar(s.z_cells.size(), 0.0);
  const std::size_t nk = static_cast<std::size_t>(s.n) * s.K;
  for (int c = 0; c < s.chains(); ++c)
    for (long m = 0; m < s.run.keep; ++m) {
      const std::size_t base = static_cast<std::size_t>(m) * nk;
      for (std::size_t t = 0; t < nk; ++t) {
        plug.alpha[t] += s.alpha[c][base + t];
        plug.beta[t] += s.beta[c][base + t];
        plug.gamma[t] += s.gamma[c][base + t];
      }
      const std::size_t zb = static_cast<std::size_t>(m) * s.z_cells.size();
      for (std::size_t t = 0; t < s.z_cells.size(); ++t)
        zbar[t] += static_cast<double>(s.z[c][zb + t]);
    }
  for (std::size_t t = 0; t < nk; ++t) {
    plug.alpha[t] /= static_cast<double>(M);
    plug.beta[t] /= static_cast<double>(M);
    plug.gamma[t] /= static_cast<double>(M);
  }
  for (std::size_t t = 0; t < s.z_cells.size(); ++t) {
    const auto& cell = s.z_cells[t];
    plug.z[plug.ijk(cell.i, cell.j, cell.k)] =
        std::lround(zbar[t] / static_cast<double>(M));
  }
  const double d_hat = conditional_deviance(panel, plug, spec.p);
  if (!std::isfinite(d_hat)) throw numeric_error("dic: non-finite plug-in deviance");
  return 2.0 * dbar - d_hat;
}

enum class LCells { in_sample, out_of_sample };

// Predictive-score pieces: L(nu) = variance_term + nu * bias_term, both
// normalized by the stated cell count for the variant.
struct LMeasureTerms {
  double variance_term = 0.0;
  double bias_term = 0.0;
  long cell_count = 0;
  double normalizer = 0.0;
};

// Out-of-sample sums over lower-triangle cells against held-out truth, cells
// simulated by the posterior predictive (normalizer K n (n-1) / 2).
// In-sample sums over observed cells against their data, cells re-simulated
// from each draw's (theta, z) (normalizer K n (n+1) / 2). Everything lives on
// the inference scale.
inline LMeasureTerms l_measure_terms(const PosteriorSamples& s, const TrianglePanel& panel,
                                     const ModelSpec& spec, LCells which, int threads = 0) {
  LMeasureTerms out;
  const long M = s.total_draws();
  const double n = s.n, K = s.K;
  if (which == LCells::out_of_sample) {
    const auto cells = unobserved_cells(panel);
    for (const auto& c : cells)
      if (!panel.present(c.i, c.j, c.k))
        throw input_error("l_measure: held-out truth missing at cell (i=" +
                          std::to_string(c.i) + ", j=" + std::to_string(c.j) +
                          ", k=" + std::to_string(c.k) + ")");
    const auto draws = predictive_draws(s, panel, spec, /*original_scale=*/false, threads);
    out.cell_count = static_cast<long>(cells.size());
    out.normalizer = K * n * (n - 1.0) / 2.0;
    std::vector<double> v(M);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      for (long m = 0; m < M; ++m) v[m] = draws.cell_draw(m, c);
      out.variance_term += sample_variance(v);
      const double diff = mean(v) - panel.value(cells[c].i, cells[c].j, cells[c].k);
      out.bias_term += diff * diff;
    }
  } else {
    const auto cells = observed_cells(panel);
    out.cell_count = static_cast<long>(cells.size());
    out.normalizer = K * n * (n + 1.0) / 2.0;
    // replicate draws of the observed cells, one per kept draw
    std::vector<double> rep(static_cast<std::size_t>(M) * cells.size());
    const RngStream base(s.run.seed, detail::kReplicateSalt);
    parallel_for(M, threads, [&](long m) {
      const int chain = static_cast<int>(m / s.run.keep);
      const DgmParams par = s.params_at(chain, m % s.run.keep);
      RngStream rng = base.substream(static_cast<std::uint64_t>(m));
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cell = cells[c];
        const double shape = par.alpha_at(cell.i, cell.k) + par.z_window(cell.i, cell.j, cell.k, spec.p);
        const double rate = par.beta_at(cell.j, cell.k) + par.gamma_window(cell.j, cell.k, spec.p);
        rep[m * cells.size() + c] = rng.gamma(shape, rate);
      }
    });
    std::vector<double> v(M);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      for (long m = 0; m < M; ++m) v[m] = rep[m * cells.size() + c];
      out.variance_term += sample_variance(v);
      const double diff = mean(v) - panel.value(cells[c].i, cells[c].j, cells[c].k);
      out.bias_term += diff * diff;
    }
  }
  out.variance_term /= out.normalizer;
  out.bias_term /= out.normalizer;
  return out;
}

inline double l_measure(const PosteriorSamples& s, const TrianglePanel& panel,
                        const ModelSpec& spec, double nu, LCells which, int threads = 0) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw input_error("l_measure: nu must be in [0, 1]");
  const auto t = l_measure_terms(s, panel, spec, which, threads);
  return t.variance_term + nu * t.bias_term;
}

// ---------------------------------------------------------------------------
// Model grid
// ---------------------------------------------------------------------------

struct GridRow {
  int model_id = 0;
  ModelSpec spec;
  double dic_value = std::numeric_limits<double>::quiet_NaN();
  double l_in = std::numeric_limits<double>::quiet_NaN();
  double l_out = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

// Fits and scores every spec in the grid; a failing model is recorded and the
// grid continues. L-measures use nu = 1/2; the out-of-sample score is only
// available when the panel carries held-out truth.
inline std::vector<GridRow> model_grid_run(const TrianglePanel& panel,
                                           const std::vector<ModelSpec>& grid,
                                           const RunConfig& run) {
  std::vector<GridRow> rows;
  bool have_truth = true;
  for (const auto& c : unobserved_cells(panel))
    if (!panel.present(c.i, c.j, c.k)) {
      have_truth = false;
      break;
    }
  int id = 0;
  for (const auto& spec : grid) {
    GridRow row;
    row.model_id = ++id;
    row.spec = spec;
    try {
      TrianglePanel work = apply_transform(panel, spec.transform);
      floor_zero_cells(work, spec.zero_floor);
      const auto samples = run_chains(work, spec, run);
      row.dic_value = dic(samples, work, spec);
      row.l_in = l_measure(samples, work, spec, 0.5, LCells::in_sample, run.threads);
      if (have_truth)
        row.l_out = l_measure(samples, work, spec, 0.5, LCells::out_of_sample, run.threads);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Grid expansion in the canonical ordering: a_beta0 slowest, then a_alpha0,
// then p fastest; each hyperprior pair sets shape = rate.
inline std::vector<ModelSpec> expand_grid(const ModelSpec& base, const std::vector<int>& ps,
                                          const std::vector<double>& alpha0s,
                                          const std::vector<double>& beta0s,
                                          const std::vector<double>& gamma0s) {
  if (ps.empty() || alpha0s.empty() || beta0s.empty() || gamma0s.empty())
    throw input_error("expand_grid: empty grid axis");
  std::vector<ModelSpec> grid;
  for (double g0 : gamma0s)
    for (double b0 : beta0s)
      for (double a0 : alpha0s)
        for (int p : ps) {
          ModelSpec spec = base;
          spec.p = p;
          spec.a_alpha0 = spec.b_alpha0 = a0;
          spec.a_beta0 = spec.b_beta0 = b0;
          spec.a_gamma0 = spec.b_gamma0 = g0;
          grid.push_back(spec);
        }
  return grid;
}

}  // namespace dgm
