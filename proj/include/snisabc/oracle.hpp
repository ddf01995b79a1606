#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "snisabc/errors.hpp"
#include "snisabc/kernel.hpp"
#include "snisabc/matrix.hpp"

namespace snisabc {

// Exact target for one query against a finite reference pool:
//   T*(x) = sum_i w_i y_i / sum_i w_i over the full pool.
struct TargetCentroid {
  Vec value;
  double mean_weight = 0.0;     // E[w] over the pool
  double mean_weight_sq = 0.0;  // E[w^2] over the pool
};

// Leading bias coefficient: E[T_n] - T* = -vector / n + O(1/n^2), with
//   vector = E[w^2 (y - T*)] / (E[w])^2.
struct LeadingBias {
  Vec vector;
  double norm = 0.0;
};

struct EffectiveSampleSize {
  double n_eff = 0.0;
  double lambda = 1.0;  // E[w^2] / (E[w])^2 >= 1
};

namespace detail {

// Log weights for the full pool plus the max, in one fixed-order pass.
// All downstream moments work with exp(lw - max) so the spread of the raw
// weights never under- or overflows the accumulators.
struct PoolWeights {
  Vec log_w;
  double max_lw = -std::numeric_limits<double>::infinity();
};

inline void pool_log_weights(std::span<const double> x, const Matrix& pool,
                             const KernelSpec& kernel, PoolWeights& pw) {
  validate(kernel);
  if (pool.rows() == 0) throw EmptyBatch("oracle: empty pool");
  if (x.size() != pool.cols())
    throw InvalidInput("oracle: query dim does not match pool dim");
  const std::size_t n = pool.rows();
  pw.log_w.resize(n);
  pw.max_lw = -std::numeric_limits<double>::infinity();
  const double inv_tau = 1.0 / kernel.tau;
  for (std::size_t i = 0; i < n; ++i) {
    const double lw = -l2_distance(x, pool.row(i)) * inv_tau;
    if (!std::isfinite(lw))
      throw InvalidInput("oracle: non-finite input at pool row " + std::to_string(i));
    pw.log_w[i] = lw;
    if (lw > pw.max_lw) pw.max_lw = lw;
  }
}

inline TargetCentroid target_from_pool_weights(const PoolWeights& pw,
                                               const Matrix& pool) {
  const std::size_t n = pool.rows();
  const std::size_t d_dim = pool.cols();
  TargetCentroid out;
  out.value.assign(d_dim, 0.0);
  double a1 = 0.0;  // sum of exp(lw - max)
  double a2 = 0.0;  // sum of exp(2 (lw - max))
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::exp(pw.log_w[i] - pw.max_lw);
    a1 += t;
    a2 += t * t;
    const double* y = pool.data() + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) out.value[d] += t * y[d];
  }
  for (std::size_t d = 0; d < d_dim; ++d) out.value[d] /= a1;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double scale = std::exp(pw.max_lw);
  out.mean_weight = scale * a1 * inv_n;
  out.mean_weight_sq = scale * scale * a2 * inv_n;
  return out;
}

}  // namespace detail

inline TargetCentroid target_centroid(std::span<const double> x, const Matrix& pool,
                                      const KernelSpec& kernel) {
  detail::PoolWeights pw;
  detail::pool_log_weights(x, pool, kernel, pw);
  return detail::target_from_pool_weights(pw, pool);
}

inline LeadingBias leading_bias(std::span<const double> x, const Matrix& pool,
                                const KernelSpec& kernel) {
  detail::PoolWeights pw;
  detail::pool_log_weights(x, pool, kernel, pw);
  const std::size_t n = pool.rows();
  const std::size_t d_dim = pool.cols();
  Vec t_star(d_dim, 0.0);
  double a1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::exp(pw.log_w[i] - pw.max_lw);
    a1 += t;
    const double* y = pool.data() + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) t_star[d] += t * y[d];
  }
  for (std::size_t d = 0; d < d_dim; ++d) t_star[d] /= a1;
  // vector = -E[w^2 (y - T*)] / (E[w])^2; the exp(max) scale cancels in the
  // ratio, leaving sums of exp-shifted terms.
  LeadingBias out;
  out.vector.assign(d_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::exp(pw.log_w[i] - pw.max_lw);
    const double t2 = t * t;
    const double* y = pool.data() + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) out.vector[d] += t2 * (y[d] - t_star[d]);
  }
  const double n_d = static_cast<double>(n);
  const double denom = (a1 / n_d) * (a1 / n_d) * n_d;  // (E-shifted w)^2 * n
  for (std::size_t d = 0; d < d_dim; ++d) out.vector[d] = -out.vector[d] / denom;
  out.norm = l2_norm(out.vector);
  return out;
}

// Exact bias of the n = 1 estimator: E[T_1] - T* = -Cov_pool(w, y) / E[w],
// which collapses algebraically to pool_mean(y) - T*. Computed from the
// covariance form with shifted weights (the common exp(max) factor cancels).
inline Vec n1_bias(std::span<const double> x, const Matrix& pool,
                   const KernelSpec& kernel) {
  if (pool.rows() < 2)
    throw InsufficientSamples("n1_bias: need a pool with >= 2 points");
  detail::PoolWeights pw;
  detail::pool_log_weights(x, pool, kernel, pw);
  const std::size_t n = pool.rows();
  const std::size_t d_dim = pool.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  double mean_w = 0.0;
  Vec mean_y(d_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mean_w += std::exp(pw.log_w[i] - pw.max_lw);
    const double* y = pool.data() + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) mean_y[d] += y[d];
  }
  mean_w *= inv_n;
  for (std::size_t d = 0; d < d_dim; ++d) mean_y[d] *= inv_n;
  Vec cov(d_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wc = std::exp(pw.log_w[i] - pw.max_lw) - mean_w;
    const double* y = pool.data() + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) cov[d] += wc * (y[d] - mean_y[d]);
  }
  for (std::size_t d = 0; d < d_dim; ++d) cov[d] = -(cov[d] * inv_n) / mean_w;
  return cov;
}

// lambda = E[w^2] / (E[w])^2 and n_eff = n / lambda. lambda >= 1 by
// Cauchy-Schwarz and grows as tau shrinks.
inline EffectiveSampleSize effective_sample_size(std::span<const double> x,
                                                 const Matrix& pool,
                                                 const KernelSpec& kernel,
                                                 std::size_t n) {
  if (n == 0) throw InvalidInput("effective_sample_size: need n >= 1");
  detail::PoolWeights pw;
  detail::pool_log_weights(x, pool, kernel, pw);
  double a1 = 0.0;
  double a2 = 0.0;
  for (double lw : pw.log_w) {
    const double t = std::exp(lw - pw.max_lw);
    a1 += t;
    a2 += t * t;
  }
  EffectiveSampleSize out;
  out.lambda = a2 * static_cast<double>(pw.log_w.size()) / (a1 * a1);
  out.n_eff = static_cast<double>(n) / out.lambda;
  return out;
}

}  // namespace snisabc
