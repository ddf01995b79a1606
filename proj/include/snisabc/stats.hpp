#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "snisabc/errors.hpp"
#include "snisabc/matrix.hpp"

namespace snisabc {

// Streaming moments of one (query, n, method) Monte Carlo point. Trials are
// accumulated in trial order with plain double sums; the per-coordinate
// second moments are enough to recover the trace of the sample covariance.
struct TrialAggregate {
  std::size_t count = 0;
  Vec sum;     // per coordinate
  Vec sum_sq;  // per coordinate
  std::uint64_t sum_time_ns = 0;
  std::size_t timed_count = 0;
  std::size_t retries = 0;

  void init(std::size_t d_dim) {
    count = 0;
    sum.assign(d_dim, 0.0);
    sum_sq.assign(d_dim, 0.0);
    sum_time_ns = 0;
    timed_count = 0;
    retries = 0;
  }

  void add(std::span<const double> value) {
    ++count;
    for (std::size_t d = 0; d < value.size(); ++d) {
      sum[d] += value[d];
      sum_sq[d] += value[d] * value[d];
    }
  }
};

struct BiasNorm {
  double corrected = 0.0;  // sqrt(max(0, naive^2 - trace/count))
  double naive = 0.0;      // ||mean - target||
  double trace_cov = 0.0;  // trace of the unbiased sample covariance
  double se_corrected = 0.0;
  bool clamped = false;    // max() clipped a negative corrected square
};

// Variance-corrected bias norm. The naive norm of the Monte Carlo mean
// overstates small biases by the Monte Carlo noise, so the noise term
// trace(Sigma)/count is subtracted in the squared domain before the root.
//
// se_corrected is a delta-method scale: with X = naive^2 - trace/count,
// Var(X) ~= sum_d (4 delta_d^2 s_d + 2 s_d^2), s_d = Sigma_dd / count. When
// the corrected norm sits above sqrt(se(X)) the usual se(X) / (2 b) applies;
// below that the estimate is noise-dominated and sqrt(se(X)) itself is the
// honest scale.
inline BiasNorm bias_corrected_norm(const TrialAggregate& agg,
                                    std::span<const double> target) {
  if (agg.count < 2)
    throw InvalidInput("bias_corrected_norm: need count >= 2, got " +
                       std::to_string(agg.count));
  if (agg.sum.size() != target.size())
    throw InvalidInput("bias_corrected_norm: dimension mismatch");
  const std::size_t d_dim = target.size();
  const double m = static_cast<double>(agg.count);
  BiasNorm out;
  double naive_sq = 0.0;
  double trace = 0.0;
  double var_x = 0.0;
  for (std::size_t d = 0; d < d_dim; ++d) {
    const double mean_d = agg.sum[d] / m;
    const double delta_d = mean_d - target[d];
    naive_sq += delta_d * delta_d;
    double var_d = (agg.sum_sq[d] - m * mean_d * mean_d) / (m - 1.0);
    if (var_d < 0.0) var_d = 0.0;  // rounding guard
    trace += var_d;
    const double s_d = var_d / m;
    var_x += 4.0 * delta_d * delta_d * s_d + 2.0 * s_d * s_d;
  }
  out.naive = std::sqrt(naive_sq);
  out.trace_cov = trace;
  const double corrected_sq = naive_sq - trace / m;
  out.clamped = corrected_sq <= 0.0;
  out.corrected = out.clamped ? 0.0 : std::sqrt(corrected_sq);
  const double se_x = std::sqrt(var_x);
  const double noise_scale = std::sqrt(se_x);
  out.se_corrected =
      out.corrected > noise_scale ? se_x / (2.0 * out.corrected) : noise_scale;
  return out;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // in log space, natural base
  double stderr_slope = 0.0;
  std::size_t points = 0;
};

// OLS of log(value) on log(n). Requires >= 3 strictly positive points so the
// residual degrees of freedom for the slope standard error are positive.
inline SlopeFit fit_slope(std::span<const double> ns, std::span<const double> values) {
  if (ns.size() != values.size())
    throw InvalidInput("fit_slope: n and value lengths differ");
  if (ns.size() < 3)
    throw InvalidInput("fit_slope: need at least 3 points, got " +
                       std::to_string(ns.size()));
  const std::size_t m = ns.size();
  Vec lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0))
      throw InvalidInput("fit_slope: points must be strictly positive");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(values[i]);
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_x += lx[i];
    mean_y += ly[i];
  }
  mean_x /= static_cast<double>(m);
  mean_y /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
    sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
  }
  if (sxx == 0.0) throw InvalidInput("fit_slope: all n values identical");
  SlopeFit fit;
  fit.points = m;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double resid = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr += resid * resid;
  }
  fit.stderr_slope = std::sqrt(ssr / (static_cast<double>(m) - 2.0) / sxx);
  return fit;
}

}  // namespace snisabc
