#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snisabc/distributions.hpp"
#include "snisabc/errors.hpp"
#include "snisabc/estimators.hpp"
#include "snisabc/kernel.hpp"
#include "snisabc/matrix.hpp"
#include "snisabc/oracle.hpp"
#include "snisabc/rng.hpp"
#include "snisabc/stats.hpp"
#include "snisabc/thread_pool.hpp"

namespace snisabc {

struct ExperimentConfig {
  GaussianMixtureSpec pool_spec;
  std::size_t pool_size = 0;
  std::uint64_t pool_seed = 0;

  QueryScheme query_scheme = QueryScheme::from_p;
  double query_scale = 0.5;  // isotropic-gaussian only
  std::size_t query_count = 0;
  std::uint64_t query_seed = 0;

  KernelSpec kernel;

  std::vector<std::size_t> n_grid;  // strictly ascending
  std::size_t trials = 0;           // Monte Carlo trials per (query, n, method)
  std::vector<Method> methods;
  bool replacement = true;

  BootstrapSpec bootstrap;
  BrSnisSpec brsnis;

  std::uint64_t master_seed = 0;

  std::size_t warmup_skip = 10;      // leading trials excluded from timing
  std::size_t slope_fit_min_n = 16;  // smallest n admitted to log-log fits
  bool measure_time = true;          // false pins every timing field to zero
  std::size_t retry_cap = 100;       // dominated-weight redraws per trial
};

inline void validate(const ExperimentConfig& cfg) {
  validate(cfg.pool_spec);
  validate(cfg.kernel);
  validate(cfg.bootstrap);
  validate(cfg.brsnis);
  if (cfg.pool_size == 0) throw InvalidInput("config: pool_size must be >= 1");
  if (cfg.query_count == 0) throw InvalidInput("config: query_count must be >= 1");
  if (cfg.query_scheme == QueryScheme::isotropic_gaussian &&
      (!(cfg.query_scale > 0.0) || !std::isfinite(cfg.query_scale)))
    throw InvalidInput("config: query_scale must be finite and > 0");
  if (cfg.n_grid.empty()) throw InvalidInput("config: n_grid must be non-empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] == 0) throw InvalidInput("config: n_grid entries must be >= 1");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1])
      throw InvalidInput("config: n_grid must be strictly ascending");
  }
  if (!cfg.replacement && cfg.n_grid.back() > cfg.pool_size)
    throw InvalidInput("config: largest n exceeds pool size without replacement");
  if (cfg.trials == 0) throw InvalidInput("config: trials must be >= 1");
  if (cfg.methods.empty()) throw InvalidInput("config: methods must be non-empty");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.methods.size(); ++j)
      if (cfg.methods[i] == cfg.methods[j])
        throw InvalidInput("config: duplicate method in methods list");
}

struct ReportRow {
  std::size_t n = 0;
  Method method = Method::standard;
  double bias_corrected = 0.0;  // arithmetic mean over queries of per-query b-hat
  double bias_naive = 0.0;
  double total_variance = 0.0;  // mean over queries of trace of sample covariance
  double mean_time_us = 0.0;
  double se_bias_corrected = 0.0;  // Monte Carlo se of the mean b-hat
  std::size_t clamped_count = 0;   // queries whose b-hat clipped at zero
  std::size_t retries = 0;
  std::uint64_t extra_samples_per_estimate = 0;  // brsnis budget overhead
};

struct PerQueryRow {
  std::size_t n = 0;
  Method method = Method::standard;
  std::size_t query_index = 0;
  double bias_corrected = 0.0;
  double bias_naive = 0.0;
  double trace_cov = 0.0;
  double se_bias_corrected = 0.0;
  bool clamped = false;
  std::size_t retries = 0;
};

struct MethodSlope {
  Method method = Method::standard;
  bool valid = false;  // at least 3 usable points
  SlopeFit fit;
  std::vector<std::size_t> used_n;
  std::vector<std::size_t> excluded_n;  // clamped-to-zero rows left out of the fit
};

struct ScalingReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;        // (n, method) in grid order
  std::vector<MethodSlope> slopes;    // scaling experiments only
  std::vector<PerQueryRow> per_query; // worst-case inspection
};

namespace detail {

struct PointScratch {
  Matrix batch;
  std::vector<std::size_t> idx;
  WeightProfile profile;
  Vec value;
  BootstrapScratch boot;
  BrSnisScratch brs;
};

struct QueryWork {
  std::span<const double> query;
  std::size_t query_index = 0;
  const Matrix* pool = nullptr;
  const Vec* pool_log_w = nullptr;  // index-aligned cache of -dist/tau
};

// All trials of one (query, n, method) Monte Carlo point, in trial order.
// Each trial runs on its own stream derived from (master_seed, query index,
// trial index, method id), so results never depend on scheduling. A
// dominated-weight failure redraws the minibatch from the same stream, up to
// retry_cap redraws. Timing covers the estimator call only; minibatch
// sampling and softmax normalization are shared bookkeeping, while brsnis is
// timed end to end because sampling is part of its estimate.
inline void run_point_trials(const QueryWork& qw, std::size_t n, Method method,
                             const ExperimentConfig& cfg, PointScratch& s,
                             TrialAggregate& agg) {
  const Matrix& pool = *qw.pool;
  const std::size_t d_dim = pool.cols();
  if (n == 0) throw InvalidInput("run_point: n must be >= 1");
  if (!cfg.replacement && n > pool.rows())
    throw InsufficientSamples("run_point: n exceeds pool size without replacement");
  if (method == Method::jackknife && n < 2)
    throw InsufficientSamples("run_point: jackknife needs n >= 2");
  agg.init(d_dim);

  FreshSampler sampler;
  if (method == Method::brsnis) {
    // Fresh reference draws are i.i.d. uniform pool rows; the pool stands in
    // for the reference distribution itself.
    sampler = [&pool, d_dim](RngStream& r, std::size_t count, Matrix& out) {
      out.resize(count, d_dim);
      for (std::size_t i = 0; i < count; ++i) {
        const double* src = pool.data() + r.uniform_index(pool.rows()) * d_dim;
        double* dst = out.data() + i * d_dim;
        for (std::size_t d = 0; d < d_dim; ++d) dst[d] = src[d];
      }
    };
  }

  using clock = std::chrono::steady_clock;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    RngStream rng = derive_stream(cfg.master_seed, qw.query_index, t,
                                  static_cast<std::uint64_t>(method));
    const bool timed = cfg.measure_time && t >= cfg.warmup_skip;
    std::size_t attempts = 0;
    for (;;) {
      try {
        if (method == Method::brsnis) {
          const auto begin = timed ? clock::now() : clock::time_point{};
          brsnis_centroid_into(qw.query, n, sampler, cfg.brsnis, cfg.kernel, rng,
                               s.brs, s.value);
          if (timed) {
            agg.sum_time_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   clock::now() - begin)
                                   .count();
            ++agg.timed_count;
          }
        } else {
          draw_minibatch_into(pool, n, cfg.replacement, rng, s.batch, &s.idx);
          s.profile.log_weights.resize(n);
          if (qw.pool_log_w) {
            const Vec& cache = *qw.pool_log_w;
            for (std::size_t j = 0; j < n; ++j)
              s.profile.log_weights[j] = cache[s.idx[j]];
          } else {
            eval_log_weights_into(qw.query, s.batch, cfg.kernel,
                                  s.profile.log_weights);
          }
          normalize_profile(s.profile);
          const auto begin = timed ? clock::now() : clock::time_point{};
          switch (method) {
            case Method::standard:
              standard_centroid_into(s.profile, s.batch, s.value);
              break;
            case Method::abc:
              abc_centroid_into(s.profile, s.batch, s.value);
              break;
            case Method::jackknife:
              jackknife_centroid_into(s.profile, s.batch, s.value);
              break;
            case Method::bootstrap:
              bootstrap_centroid_into(s.profile, s.batch, cfg.bootstrap, rng,
                                      s.boot, s.value);
              break;
            default:
              throw InvalidInput("run_point: unknown method");
          }
          if (timed) {
            agg.sum_time_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                                   clock::now() - begin)
                                   .count();
            ++agg.timed_count;
          }
        }
        break;
      } catch (const DominatedWeight& err) {
        ++agg.retries;
        if (++attempts > cfg.retry_cap)
          throw ExperimentError(
              "retry cap exceeded at query " + std::to_string(qw.query_index) +
              ", n " + std::to_string(n) + ", method " + to_string(method) +
              ", trial " + std::to_string(t) + ": " + err.what());
      }
    }
    agg.add(s.value);
  }
}

}  // namespace detail

// One Monte Carlo point: `trials` estimates of one method at one (query, n),
// aggregated into running moments. Deterministic in (config, query_index).
inline TrialAggregate run_point(std::span<const double> query,
                                std::size_t query_index, std::size_t n,
                                Method method, const ExperimentConfig& cfg,
                                const SamplePool& pool) {
  validate(cfg.kernel);
  validate(cfg.bootstrap);
  validate(cfg.brsnis);
  if (cfg.trials == 0) throw InvalidInput("run_point: trials must be >= 1");
  detail::PoolWeights pw;
  detail::pool_log_weights(query, pool.points, cfg.kernel, pw);
  detail::QueryWork qw{query, query_index, &pool.points, &pw.log_w};
  detail::PointScratch scratch;
  TrialAggregate agg;
  detail::run_point_trials(qw, n, method, cfg, scratch, agg);
  return agg;
}

namespace detail {

struct PointStat {
  double bhat = 0.0;
  double naive = 0.0;
  double trace = 0.0;
  double se_bhat = 0.0;
  bool clamped = false;
  std::size_t retries = 0;
  std::uint64_t time_ns = 0;
  std::size_t timed_count = 0;
};

inline PointStat summarize_point(const TrialAggregate& agg,
                                 std::span<const double> target) {
  PointStat st;
  st.retries = agg.retries;
  st.time_ns = agg.sum_time_ns;
  st.timed_count = agg.timed_count;
  if (agg.count >= 2) {
    const BiasNorm bn = bias_corrected_norm(agg, target);
    st.bhat = bn.corrected;
    st.naive = bn.naive;
    st.trace = bn.trace_cov;
    st.se_bhat = bn.se_corrected;
    st.clamped = bn.clamped;
  } else {
    // Single-trial point: no variance estimate, so the corrected norm
    // degenerates to the naive norm.
    double naive_sq = 0.0;
    const double m = static_cast<double>(agg.count);
    for (std::size_t d = 0; d < target.size(); ++d) {
      const double delta = agg.sum[d] / m - target[d];
      naive_sq += delta * delta;
    }
    st.naive = std::sqrt(naive_sq);
    st.bhat = st.naive;
  }
  return st;
}

// Shared engine behind the scaling and baseline experiments. Work is split
// per query; every (query, n, method) stat lands in its own slot, so the
// assembled report is byte-identical for any worker count.
inline ScalingReport run_experiment_engine(const ExperimentConfig& cfg,
                                           std::size_t workers) {
  validate(cfg);
  const SamplePool pool = build_pool(cfg.pool_spec, cfg.pool_size, cfg.pool_seed);
  const QuerySet queries = build_queries(cfg.query_scheme, cfg.query_count,
                                         cfg.pool_spec, cfg.query_scale,
                                         cfg.query_seed);
  const std::size_t q_count = cfg.query_count;
  const std::size_t n_count = cfg.n_grid.size();
  const std::size_t m_count = cfg.methods.size();
  std::vector<PointStat> stats(q_count * n_count * m_count);

  parallel_for_index(q_count, workers, [&](std::size_t q) {
    PoolWeights pw;
    pool_log_weights(queries.queries.row(q), pool.points, cfg.kernel, pw);
    const TargetCentroid target = target_from_pool_weights(pw, pool.points);
    QueryWork qw{queries.queries.row(q), q, &pool.points, &pw.log_w};
    PointScratch scratch;
    TrialAggregate agg;
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      for (std::size_t mi = 0; mi < m_count; ++mi) {
        run_point_trials(qw, cfg.n_grid[ni], cfg.methods[mi], cfg, scratch, agg);
        stats[(q * n_count + ni) * m_count + mi] = summarize_point(agg, target.value);
      }
    }
  });

  ScalingReport rep;
  rep.config = cfg;
  rep.rows.reserve(n_count * m_count);
  const double inv_q = 1.0 / static_cast<double>(q_count);
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    for (std::size_t mi = 0; mi < m_count; ++mi) {
      ReportRow row;
      row.n = cfg.n_grid[ni];
      row.method = cfg.methods[mi];
      double se_sq = 0.0;
      std::uint64_t time_ns = 0;
      std::size_t timed = 0;
      for (std::size_t q = 0; q < q_count; ++q) {
        const PointStat& st = stats[(q * n_count + ni) * m_count + mi];
        row.bias_corrected += st.bhat;
        row.bias_naive += st.naive;
        row.total_variance += st.trace;
        se_sq += st.se_bhat * st.se_bhat;
        row.clamped_count += st.clamped ? 1 : 0;
        row.retries += st.retries;
        time_ns += st.time_ns;
        timed += st.timed_count;
      }
      row.bias_corrected *= inv_q;
      row.bias_naive *= inv_q;
      row.total_variance *= inv_q;
      row.se_bias_corrected = std::sqrt(se_sq) * inv_q;
      row.mean_time_us =
          timed == 0 ? 0.0
                     : static_cast<double>(time_ns) / static_cast<double>(timed) / 1e3;
      if (cfg.methods[mi] == Method::brsnis)
        row.extra_samples_per_estimate = brsnis_extra_samples(cfg.n_grid[ni], cfg.brsnis);
      rep.rows.push_back(row);
    }
  }
  rep.per_query.reserve(stats.size());
  for (std::size_t ni = 0; ni < n_count; ++ni)
    for (std::size_t mi = 0; mi < m_count; ++mi)
      for (std::size_t q = 0; q < q_count; ++q) {
        const PointStat& st = stats[(q * n_count + ni) * m_count + mi];
        rep.per_query.push_back({cfg.n_grid[ni], cfg.methods[mi], q, st.bhat,
                                 st.naive, st.trace, st.se_bhat, st.clamped,
                                 st.retries});
      }
  return rep;
}

}  // namespace detail

// Bias scaling versus n: per-row corrected bias norms plus per-method log-log
// slope fits. Rows whose mean b-hat clamped to zero cannot enter a log fit;
// they are recorded in excluded_n instead.
inline ScalingReport run_scaling_experiment(const ExperimentConfig& cfg,
                                            std::size_t workers = 0) {
  if (workers == 0) workers = default_worker_count();
  ScalingReport rep = detail::run_experiment_engine(cfg, workers);
  for (Method m : cfg.methods) {
    MethodSlope ms;
    ms.method = m;
    Vec ns, values;
    for (const ReportRow& row : rep.rows) {
      if (row.method != m || row.n < cfg.slope_fit_min_n) continue;
      if (row.bias_corrected > 0.0) {
        ns.push_back(static_cast<double>(row.n));
        values.push_back(row.bias_corrected);
        ms.used_n.push_back(row.n);
      } else {
        ms.excluded_n.push_back(row.n);
      }
    }
    if (ns.size() >= 3) {
      ms.fit = fit_slope(ns, values);
      ms.valid = true;
    }
    rep.slopes.push_back(ms);
  }
  return rep;
}

// Fixed-n method comparison (bias, variance, wall time per estimate). Same
// engine, no slope fits; the headline bias for this protocol is the naive
// norm, which the report rows carry alongside the corrected one.
inline ScalingReport run_baseline_comparison(const ExperimentConfig& cfg,
                                             std::size_t workers = 0) {
  if (workers == 0) workers = default_worker_count();
  return detail::run_experiment_engine(cfg, workers);
}

}  // namespace snisabc
