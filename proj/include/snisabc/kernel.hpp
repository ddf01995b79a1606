#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "snisabc/errors.hpp"
#include "snisabc/matrix.hpp"

namespace snisabc {

enum class KernelFamily { exponential_l2 };

// k(x, y) = exp(-||x - y||_2 / tau), values in (0, 1].
struct KernelSpec {
  KernelFamily family = KernelFamily::exponential_l2;
  double tau = 1.0;
};

inline void validate(const KernelSpec& spec) {
  if (!(spec.tau > 0.0) || !std::isfinite(spec.tau))
    throw InvalidInput("kernel: tau must be finite and > 0, got " +
                       std::to_string(spec.tau));
}

// Softmax weights for one query against one batch. Everything stays in the
// log domain until normalization, so batches with enormous weight spreads
// normalize without underflow.
struct WeightProfile {
  Vec log_weights;
  Vec alpha;                    // alpha_i >= 0, sums to 1
  double sum_alpha_sq = 0.0;    // in [1/n, 1]
  double log_mean_weight = 0.0; // log of the unnormalized mean weight
};

// log k(x, y_i) = -||x - y_i|| / tau for every batch row.
inline void eval_log_weights_into(std::span<const double> x, MatrixView batch,
                                  const KernelSpec& spec, Vec& out) {
  validate(spec);
  if (batch.rows == 0) throw EmptyBatch("eval_log_weights: empty batch");
  if (x.size() != batch.cols)
    throw InvalidInput("eval_log_weights: query dim " + std::to_string(x.size()) +
                       " vs batch dim " + std::to_string(batch.cols));
  out.resize(batch.rows);
  const double inv_tau = 1.0 / spec.tau;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const double lw = -l2_distance(x, batch.row(i)) * inv_tau;
    if (!std::isfinite(lw))
      throw InvalidInput("eval_log_weights: non-finite input at batch row " +
                         std::to_string(i));
    out[i] = lw;
  }
}

inline Vec eval_log_weights(std::span<const double> x, MatrixView batch,
                            const KernelSpec& spec) {
  Vec out;
  eval_log_weights_into(x, batch, spec, out);
  return out;
}

// Softmax with max subtraction. Invariant under a common shift of the log
// weights; an all-equal batch yields alpha_i = 1/n exactly. Reads
// p.log_weights and fills the remaining fields in place.
inline void normalize_profile(WeightProfile& p) {
  const std::size_t n = p.log_weights.size();
  if (n == 0) throw EmptyBatch("normalize: empty log-weight vector");
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : p.log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
      throw InvalidInput("normalize: non-finite log weight");
    if (lw > max_lw) max_lw = lw;
  }
  if (max_lw == -std::numeric_limits<double>::infinity())
    throw InvalidInput("normalize: all log weights are -inf");
  p.alpha.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::exp(p.log_weights[i] - max_lw);
    p.alpha[i] = t;
    total += t;
  }
  double sum_sq = 0.0;
  const double inv_total = 1.0 / total;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = p.alpha[i] * inv_total;
    p.alpha[i] = a;
    sum_sq += a * a;
  }
  p.sum_alpha_sq = sum_sq;
  p.log_mean_weight = max_lw + std::log(total / static_cast<double>(n));
}

inline WeightProfile normalize(Vec log_weights) {
  WeightProfile p;
  p.log_weights = std::move(log_weights);
  normalize_profile(p);
  return p;
}

}  // namespace snisabc
