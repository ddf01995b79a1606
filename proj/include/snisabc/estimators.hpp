#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "snisabc/errors.hpp"
#include "snisabc/kernel.hpp"
#include "snisabc/matrix.hpp"
#include "snisabc/rng.hpp"

namespace snisabc {

enum class Method : std::uint8_t {
  standard = 0,
  abc = 1,
  jackknife = 2,
  bootstrap = 3,
  brsnis = 4,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::standard: return "standard";
    case Method::abc: return "abc";
    case Method::jackknife: return "jackknife";
    case Method::bootstrap: return "bootstrap";
    case Method::brsnis: return "brsnis";
  }
  return "unknown";
}

inline std::optional<Method> method_from_string(std::string_view s) {
  if (s == "standard") return Method::standard;
  if (s == "abc") return Method::abc;
  if (s == "jackknife") return Method::jackknife;
  if (s == "bootstrap") return Method::bootstrap;
  if (s == "brsnis") return Method::brsnis;
  return std::nullopt;
}

struct CentroidEstimate {
  Vec value;
  Method method = Method::standard;
  // Fresh draws beyond the n a fixed-batch estimator would use. Zero for
  // every method except brsnis, which consumes K*(n-1)+1 samples total.
  std::uint64_t extra_samples_consumed = 0;
};

struct BootstrapSpec {
  std::size_t replicates = 100;  // B >= 1
};

inline void validate(const BootstrapSpec& s) {
  if (s.replicates == 0) throw InvalidInput("bootstrap: replicates must be >= 1");
}

struct BrSnisSpec {
  std::size_t iterations = 10;  // K
  std::size_t burn_in = 1;      // k0; centroids from iterations k0+1..K are kept
};

inline void validate(const BrSnisSpec& s) {
  if (s.iterations == 0 || s.iterations <= s.burn_in)
    throw InvalidInput("brsnis: need iterations > burn_in >= 0, got K=" +
                       std::to_string(s.iterations) + " k0=" +
                       std::to_string(s.burn_in));
}

namespace detail {

inline void require_profile_matches(const WeightProfile& w, MatrixView batch,
                                    const char* who) {
  if (batch.rows == 0) throw EmptyBatch(std::string(who) + ": empty batch");
  if (w.alpha.size() != batch.rows)
    throw InvalidInput(std::string(who) + ": profile has " +
                       std::to_string(w.alpha.size()) + " weights for " +
                       std::to_string(batch.rows) + " batch rows");
}

}  // namespace detail

// T_n = sum_i alpha_i y_i.
inline void standard_centroid_into(const WeightProfile& w, MatrixView batch,
                                   Vec& out) {
  detail::require_profile_matches(w, batch, "standard_centroid");
  const std::size_t d_dim = batch.cols;
  out.assign(d_dim, 0.0);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const double a = w.alpha[i];
    const double* y = batch.data + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) out[d] += a * y[d];
  }
}

inline CentroidEstimate standard_centroid(const WeightProfile& w, MatrixView batch) {
  CentroidEstimate e;
  e.method = Method::standard;
  standard_centroid_into(w, batch, e.value);
  return e;
}

// Bias-corrected centroid via the convex reweighting
//   gamma_i = alpha_i * (1 - sum_j alpha_j^2) + alpha_i^2,
// which equals T_n - Delta_n with Delta_n = sum_i alpha_i^2 (T_n - y_i).
// The gamma_i are nonnegative and sum to one, so the output cannot leave the
// convex hull of the batch. One extra pass over the batch: O(nD).
inline void abc_centroid_into(const WeightProfile& w, MatrixView batch, Vec& out) {
  detail::require_profile_matches(w, batch, "abc_centroid");
  const std::size_t d_dim = batch.cols;
  const double shrink = 1.0 - w.sum_alpha_sq;
  out.assign(d_dim, 0.0);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const double a = w.alpha[i];
    const double gamma = a * shrink + a * a;
    const double* y = batch.data + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) out[d] += gamma * y[d];
  }
}

inline CentroidEstimate abc_centroid(const WeightProfile& w, MatrixView batch) {
  CentroidEstimate e;
  e.method = Method::abc;
  abc_centroid_into(w, batch, e.value);
  return e;
}

// The gamma weights on their own, for property checks.
inline Vec abc_hull_weights(const WeightProfile& w) {
  Vec gamma(w.alpha.size());
  const double shrink = 1.0 - w.sum_alpha_sq;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    gamma[i] = w.alpha[i] * shrink + w.alpha[i] * w.alpha[i];
  return gamma;
}

inline constexpr double kJackknifeAlphaGuard = 1e-8;

// Leave-one-out bias correction, n * T_n - (n-1) * mean_i T_{n,-i}, using the
// closed form T_{n,-i} = (T_n - alpha_i y_i) / (1 - alpha_i). Refuses batches
// where one weight holds essentially all the mass, since the 1 - alpha_i
// denominator is then pure noise.
inline void jackknife_centroid_into(const WeightProfile& w, MatrixView batch,
                                    Vec& out) {
  detail::require_profile_matches(w, batch, "jackknife_centroid");
  const std::size_t n = batch.rows;
  if (n < 2)
    throw InsufficientSamples("jackknife_centroid: need n >= 2, got " +
                              std::to_string(n));
  const std::size_t d_dim = batch.cols;
  Vec t_n(d_dim, 0.0);
  double max_alpha = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = w.alpha[i];
    if (a > max_alpha) max_alpha = a;
    const double* y = batch.data + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) t_n[d] += a * y[d];
  }
  if (max_alpha > 1.0 - kJackknifeAlphaGuard)
    throw DominatedWeight("jackknife_centroid: max alpha " +
                          std::to_string(max_alpha) + " too close to 1");
  Vec loo_mean(d_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = w.alpha[i];
    const double inv = 1.0 / (1.0 - a);
    const double* y = batch.data + i * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d)
      loo_mean[d] += (t_n[d] - a * y[d]) * inv;
  }
  const double n_d = static_cast<double>(n);
  out.resize(d_dim);
  for (std::size_t d = 0; d < d_dim; ++d)
    out[d] = n_d * t_n[d] - (n_d - 1.0) * (loo_mean[d] / n_d);
}

inline CentroidEstimate jackknife_centroid(const WeightProfile& w, MatrixView batch) {
  CentroidEstimate e;
  e.method = Method::jackknife;
  jackknife_centroid_into(w, batch, e.value);
  return e;
}

namespace detail {

// Softmax centroid of a resample given by indices into the batch. Works from
// the stored log weights with a fresh max subtraction, so a replicate whose
// points all carry tiny absolute weights still normalizes cleanly.
inline void resample_centroid(const WeightProfile& w, MatrixView batch,
                              const std::vector<std::size_t>& idx, Vec& scratch,
                              Vec& out) {
  const std::size_t n = idx.size();
  const std::size_t d_dim = batch.cols;
  double max_lw = w.log_weights[idx[0]];
  for (std::size_t j = 1; j < n; ++j)
    if (w.log_weights[idx[j]] > max_lw) max_lw = w.log_weights[idx[j]];
  scratch.resize(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = std::exp(w.log_weights[idx[j]] - max_lw);
    scratch[j] = t;
    total += t;
  }
  const double inv_total = 1.0 / total;
  out.assign(d_dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = scratch[j] * inv_total;
    const double* y = batch.data + idx[j] * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) out[d] += a * y[d];
  }
}

}  // namespace detail

struct BootstrapScratch {
  std::vector<std::size_t> idx;
  Vec weights;
  Vec replicate;
  Vec boot_mean;
  Vec t_n;
};

// 2 T_n - mean_b T*(b) over B index resamples. Resampled weights are
// renormalized from the stored log weights; the kernel is never re-evaluated.
inline void bootstrap_centroid_into(const WeightProfile& w, MatrixView batch,
                                    const BootstrapSpec& spec, RngStream& rng,
                                    BootstrapScratch& s, Vec& out) {
  detail::require_profile_matches(w, batch, "bootstrap_centroid");
  validate(spec);
  const std::size_t n = batch.rows;
  const std::size_t d_dim = batch.cols;
  standard_centroid_into(w, batch, s.t_n);
  s.boot_mean.assign(d_dim, 0.0);
  s.idx.resize(n);
  for (std::size_t b = 0; b < spec.replicates; ++b) {
    for (std::size_t j = 0; j < n; ++j) s.idx[j] = rng.uniform_index(n);
    detail::resample_centroid(w, batch, s.idx, s.weights, s.replicate);
    for (std::size_t d = 0; d < d_dim; ++d) s.boot_mean[d] += s.replicate[d];
  }
  const double inv_b = 1.0 / static_cast<double>(spec.replicates);
  out.resize(d_dim);
  for (std::size_t d = 0; d < d_dim; ++d)
    out[d] = 2.0 * s.t_n[d] - s.boot_mean[d] * inv_b;
}

inline CentroidEstimate bootstrap_centroid(const WeightProfile& w, MatrixView batch,
                                           const BootstrapSpec& spec, RngStream& rng) {
  CentroidEstimate e;
  e.method = Method::bootstrap;
  BootstrapScratch s;
  bootstrap_centroid_into(w, batch, spec, rng, s, e.value);
  return e;
}

// Supplies `count` fresh reference draws as rows of `out`. Must throw
// InsufficientSamples once it cannot honor the request.
using FreshSampler = std::function<void(RngStream& rng, std::size_t count, Matrix& out)>;

struct BrSnisScratch {
  Matrix pool;
  Vec state;
  WeightProfile profile;
  Vec centroid;
  Vec acc;
  Matrix fresh;
};

// Iterated sampling-importance-resampling estimate. Each of K iterations
// pools the carried state with n-1 fresh draws, records the softmax centroid
// of that pool, and resamples the next state from it proportionally to the
// softmax weights. The estimate averages the centroids after k0 burn-in
// iterations and consumes K*(n-1)+1 fresh draws in total.
inline void brsnis_centroid_into(std::span<const double> x, std::size_t n,
                                 const FreshSampler& fresh_sampler,
                                 const BrSnisSpec& spec, const KernelSpec& kernel,
                                 RngStream& rng, BrSnisScratch& s, Vec& out) {
  validate(spec);
  validate(kernel);
  if (n < 1) throw InvalidInput("brsnis_centroid: need n >= 1");
  const std::size_t d_dim = x.size();

  fresh_sampler(rng, 1, s.fresh);
  if (s.fresh.rows() != 1 || s.fresh.cols() != d_dim)
    throw InvalidInput("brsnis_centroid: sampler returned wrong shape");
  s.state.assign(s.fresh.row(0).begin(), s.fresh.row(0).end());

  s.pool.resize(n, d_dim);
  s.acc.assign(d_dim, 0.0);
  std::size_t kept = 0;
  for (std::size_t k = 1; k <= spec.iterations; ++k) {
    for (std::size_t d = 0; d < d_dim; ++d) s.pool(0, d) = s.state[d];
    if (n > 1) {
      fresh_sampler(rng, n - 1, s.fresh);
      if (s.fresh.rows() != n - 1 || s.fresh.cols() != d_dim)
        throw InvalidInput("brsnis_centroid: sampler returned wrong shape");
      for (std::size_t i = 0; i < n - 1; ++i)
        for (std::size_t d = 0; d < d_dim; ++d) s.pool(i + 1, d) = s.fresh(i, d);
    }
    eval_log_weights_into(x, s.pool, kernel, s.profile.log_weights);
    normalize_profile(s.profile);
    standard_centroid_into(s.profile, s.pool, s.centroid);
    if (k > spec.burn_in) {
      for (std::size_t d = 0; d < d_dim; ++d) s.acc[d] += s.centroid[d];
      ++kept;
    }
    if (k < spec.iterations) {
      // Resample the carried state proportionally to the softmax weights.
      const double u = rng.uniform01();
      double cum = 0.0;
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += s.profile.alpha[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
      s.state.assign(s.pool.row(pick).begin(), s.pool.row(pick).end());
    }
  }
  out.resize(d_dim);
  const double inv_kept = 1.0 / static_cast<double>(kept);
  for (std::size_t d = 0; d < d_dim; ++d) out[d] = s.acc[d] * inv_kept;
}

inline std::uint64_t brsnis_extra_samples(std::size_t n, const BrSnisSpec& spec) {
  const std::uint64_t consumed =
      static_cast<std::uint64_t>(spec.iterations) * (n - 1) + 1;
  return consumed > n ? consumed - n : 0;
}

inline CentroidEstimate brsnis_centroid(std::span<const double> x, std::size_t n,
                                        const FreshSampler& fresh_sampler,
                                        const BrSnisSpec& spec,
                                        const KernelSpec& kernel, RngStream& rng) {
  CentroidEstimate e;
  e.method = Method::brsnis;
  BrSnisScratch s;
  brsnis_centroid_into(x, n, fresh_sampler, spec, kernel, rng, s, e.value);
  e.extra_samples_consumed = brsnis_extra_samples(n, spec);
  return e;
}

}  // namespace snisabc
