#pragma once

// Property checks for the estimator stack. Each check returns a
// PropertyResult instead of asserting so the CLI can print one line per
// property and the acceptance suite can reuse the same code with larger
// case budgets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "snisabc/distributions.hpp"
#include "snisabc/estimators.hpp"
#include "snisabc/harness.hpp"
#include "snisabc/kernel.hpp"
#include "snisabc/oracle.hpp"
#include "snisabc/report_io.hpp"
#include "snisabc/rng.hpp"
#include "snisabc/stats.hpp"

namespace snisabc {

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Signature of the bias-corrected estimator under test. check_convex_hull
// takes it as a parameter so a deliberately broken implementation can be
// injected to prove the check has teeth.
using AbcFn = std::function<void(const WeightProfile&, MatrixView, Vec&)>;

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

inline Matrix random_matrix(std::size_t rows, std::size_t cols, double scale,
                            RngStream& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Log-weights with a case-dependent spread so the sweep hits both nearly
// uniform and nearly one-hot softmax profiles.
inline Vec random_log_weights(std::size_t n, double spread, RngStream& rng) {
  Vec lw(n);
  for (double& v : lw) v = spread * rng.normal();
  return lw;
}

inline double max_alpha(const WeightProfile& p) {
  return *std::max_element(p.alpha.begin(), p.alpha.end());
}

}  // namespace detail

// Two fixtures where the softmax centroid is unbiased at every batch size,
// so any measured bias is pure Monte Carlo noise and the corrected norm
// must sit within a few standard errors of zero.
//
//  - constant-weight: pool on a circle around the query, all kernel weights
//    equal, the estimate is the plain batch mean.
//  - point-symmetric: pool invariant under y -> 2x - y, so the estimate's
//    distribution is symmetric about x for every n.
inline PropertyResult check_zero_bias_fixtures(std::uint64_t seed,
                                               std::size_t trials,
                                               std::size_t n = 8) {
  PropertyResult res{"zero-bias-fixtures", true, ""};
  const KernelSpec kernel{KernelFamily::exponential_l2, 0.35};
  std::ostringstream detail_out;

  struct Fixture {
    const char* label;
    Matrix pool;
    Vec query;
  };
  std::vector<Fixture> fixtures;

  {
    Fixture f;
    f.label = "constant-weight";
    f.query = {0.3, -0.2};
    const std::size_t count = 64;
    f.pool.resize(count, 2);
    for (std::size_t i = 0; i < count; ++i) {
      const double ang =
          2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
      f.pool(i, 0) = f.query[0] + 0.7 * std::cos(ang);
      f.pool(i, 1) = f.query[1] + 0.7 * std::sin(ang);
    }
    fixtures.push_back(std::move(f));
  }
  {
    Fixture f;
    f.label = "point-symmetric";
    f.query = {-0.1, 0.4};
    RngStream rng = derive_stream(seed, 0x7a626673ULL, 0, 0);
    const std::size_t half = 32;
    f.pool.resize(2 * half, 2);
    for (std::size_t i = 0; i < half; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double y = f.query[j] + 0.6 * rng.normal();
        f.pool(i, j) = y;
        f.pool(half + i, j) = 2.0 * f.query[j] - y;
      }
    }
    fixtures.push_back(std::move(f));
  }

  for (std::size_t fi = 0; fi < fixtures.size(); ++fi) {
    const Fixture& f = fixtures[fi];
    const TargetCentroid target = target_centroid(f.query, f.pool, kernel);

    TrialAggregate agg;
    agg.init(2);
    Matrix batch;
    Vec lw, value;
    RngStream rng = derive_stream(seed, 0x7a62ULL, fi, 1);
    for (std::size_t t = 0; t < trials; ++t) {
      draw_minibatch_into(f.pool, n, true, rng, batch);
      eval_log_weights_into(f.query, batch, kernel, lw);
      WeightProfile p = normalize(std::move(lw));
      standard_centroid_into(p, batch, value);
      agg.add(value);
      lw = std::move(p.log_weights);
    }
    const BiasNorm bn = bias_corrected_norm(agg, target.value);
    const bool ok = bn.corrected <= 5.0 * bn.se_corrected;
    if (!ok) res.pass = false;
    if (!detail_out.str().empty()) detail_out << "; ";
    detail_out << f.label << ": b=" << detail::fmt(bn.corrected)
               << " se=" << detail::fmt(bn.se_corrected)
               << (bn.clamped ? " (clamped)" : "") << (ok ? "" : " EXCEEDS 5 se");
  }
  res.detail = detail_out.str();
  return res;
}

// The corrected estimate must stay a convex combination of the batch: hull
// weights nonnegative and summing to one, and the combination must equal
// the subtract-the-correction form computed independently here.
inline PropertyResult check_convex_hull(std::size_t cases, std::uint64_t seed,
                                        AbcFn fn = {}) {
  PropertyResult res{"convex-hull", true, ""};
  if (!fn)
    fn = [](const WeightProfile& w, MatrixView batch, Vec& out) {
      abc_centroid_into(w, batch, out);
    };
  std::size_t failures = 0;
  std::string first;
  for (std::size_t c = 0; c < cases; ++c) {
    RngStream rng = derive_stream(seed, 0x68756c6cULL, c, 0);
    const std::size_t dim = 1 + rng.uniform_index(6);
    const std::size_t n = 2 + rng.uniform_index(63);
    const double spread = std::exp(6.0 * rng.uniform01() - 2.0);
    const Matrix batch = detail::random_matrix(n, dim, 1.0, rng);
    const WeightProfile p = normalize(detail::random_log_weights(n, spread, rng));

    std::string err;
    const Vec gamma = abc_hull_weights(p);
    double gamma_sum = 0.0, gamma_min = 0.0;
    for (double g : gamma) {
      gamma_sum += g;
      gamma_min = std::min(gamma_min, g);
    }
    if (gamma_min < -1e-15)
      err = "negative hull weight " + detail::fmt(gamma_min);
    else if (std::abs(gamma_sum - 1.0) > 1e-12)
      err = "hull weights sum to " + detail::fmt(gamma_sum);

    if (err.empty()) {
      // Independent recomputation of the corrected point from alpha alone.
      Vec t_n(dim, 0.0);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += p.alpha[i] * p.alpha[i];
        for (std::size_t d = 0; d < dim; ++d)
          t_n[d] += p.alpha[i] * batch.row(i)[d];
      }
      Vec expected(dim, 0.0);
      for (std::size_t d = 0; d < dim; ++d) {
        double delta_d = s * t_n[d];
        for (std::size_t i = 0; i < n; ++i)
          delta_d -= p.alpha[i] * p.alpha[i] * batch.row(i)[d];
        expected[d] = t_n[d] - delta_d;
      }

      Vec impl;
      fn(p, batch, impl);
      Vec hull(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) hull[d] += gamma[i] * batch.row(i)[d];

      double diff_impl = 0.0, diff_hull = 0.0, norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        diff_impl = std::max(diff_impl, std::abs(impl[d] - expected[d]));
        diff_hull = std::max(diff_hull, std::abs(hull[d] - expected[d]));
        norm = std::max(norm, std::abs(expected[d]));
      }
      const double tol = 1e-10 * std::max(1.0, norm);
      if (diff_impl > tol)
        err = "estimate differs from corrected form by " + detail::fmt(diff_impl);
      else if (diff_hull > tol)
        err = "hull combination differs by " + detail::fmt(diff_hull);
    }

    if (!err.empty()) {
      ++failures;
      if (first.empty())
        first = "case " + std::to_string(c) + " (n=" + std::to_string(n) +
                ", d=" + std::to_string(dim) + "): " + err;
    }
  }
  if (failures > 0) {
    res.pass = false;
    res.detail = std::to_string(failures) + "/" + std::to_string(cases) +
                 " cases failed; first: " + first;
  } else {
    res.detail = std::to_string(cases) + " cases";
  }
  return res;
}

// Closed-form jackknife against brute-force leave-one-out renormalization.
inline PropertyResult check_jackknife_identity(std::size_t cases,
                                               std::uint64_t seed) {
  PropertyResult res{"jackknife-identity", true, ""};
  std::size_t failures = 0, skipped = 0;
  std::string first;
  for (std::size_t c = 0; c < cases; ++c) {
    RngStream rng = derive_stream(seed, 0x6a61636bULL, c, 0);
    const std::size_t dim = 1 + rng.uniform_index(5);
    const std::size_t n = 2 + rng.uniform_index(39);
    const double spread = std::exp(4.0 * rng.uniform01() - 2.0);
    const Matrix batch = detail::random_matrix(n, dim, 1.0, rng);
    const Vec lw = detail::random_log_weights(n, spread, rng);
    const WeightProfile p = normalize(lw);
    if (detail::max_alpha(p) > 1.0 - 1e-6) {
      ++skipped;
      continue;
    }

    Vec closed;
    jackknife_centroid_into(p, batch, closed);

    Vec t_n(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) t_n[d] += p.alpha[i] * batch.row(i)[d];
    Vec loo_mean(dim, 0.0);
    Vec lw_minus(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) lw_minus[k++] = lw[j];
      const WeightProfile pm = normalize(lw_minus);
      std::size_t r = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t d = 0; d < dim; ++d)
          loo_mean[d] += pm.alpha[r] * batch.row(j)[d];
        ++r;
      }
    }
    const double nn = static_cast<double>(n);
    double diff = 0.0, norm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double brute = nn * t_n[d] - (nn - 1.0) * (loo_mean[d] / nn);
      diff = std::max(diff, std::abs(closed[d] - brute));
      norm = std::max(norm, std::abs(brute));
    }
    if (diff > 1e-10 * std::max(1.0, norm)) {
      ++failures;
      if (first.empty())
        first = "case " + std::to_string(c) + " (n=" + std::to_string(n) +
                "): max diff " + detail::fmt(diff);
    }
  }
  if (failures > 0) {
    res.pass = false;
    res.detail = std::to_string(failures) + " cases failed; first: " + first;
  } else {
    res.detail = std::to_string(cases - skipped) + " cases (" +
                 std::to_string(skipped) + " dominated, skipped)";
  }
  return res;
}

// Monte Carlo mean of single-draw estimates against the closed-form n=1
// bias. A single-point batch ignores its weight, so the estimate is the
// drawn point itself and its mean must equal target + n1 bias.
inline PropertyResult check_n1_bias(std::uint64_t seed, std::size_t trials) {
  PropertyResult res{"n1-bias", true, ""};
  const KernelSpec kernel{KernelFamily::exponential_l2, 0.1};
  const SamplePool pool = build_pool(four_mode_toy(), 20000, 7);
  const QuerySet qs =
      build_queries(QueryScheme::from_p, 1, four_mode_toy(), 0.5, 8);
  const auto query = qs.queries.row(0);

  const TargetCentroid target = target_centroid(query, pool.points, kernel);
  const Vec v1 = n1_bias(query, pool.points, kernel);

  const std::size_t dim = pool.points.cols();
  TrialAggregate agg;
  agg.init(dim);
  Matrix batch;
  Vec lw, value;
  RngStream rng = derive_stream(seed, 0x6e314d43ULL, 0, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    draw_minibatch_into(pool.points, 1, true, rng, batch);
    eval_log_weights_into(query, batch, kernel, lw);
    WeightProfile p = normalize(std::move(lw));
    standard_centroid_into(p, batch, value);
    agg.add(value);
    lw = std::move(p.log_weights);
  }

  std::ostringstream detail_out;
  const double m = static_cast<double>(agg.count);
  for (std::size_t d = 0; d < dim; ++d) {
    const double mean = agg.sum[d] / m;
    const double var =
        std::max(0.0, (agg.sum_sq[d] - m * mean * mean) / (m - 1.0));
    const double se = std::sqrt(var / m);
    const double expected = target.value[d] + v1[d];
    const double dev = std::abs(mean - expected);
    if (dev > 5.0 * se) res.pass = false;
    if (d) detail_out << "; ";
    detail_out << "coord " << d << ": dev=" << detail::fmt(dev)
               << " se=" << detail::fmt(se) << (dev > 5.0 * se ? " EXCEEDS" : "");
  }
  res.detail = detail_out.str();
  return res;
}

// n * b(n) against the norm of the closed-form leading bias vector. The
// expansion's remainder is O(1/n^2), so at the n used here the relative
// gap must fall inside rel_tol.
inline PropertyResult check_leading_constant(
    std::uint64_t seed, std::size_t trials, const std::vector<std::size_t>& ns,
    std::size_t query_count, double rel_tol, std::size_t pool_size = 50000) {
  PropertyResult res{"leading-constant", true, ""};
  const KernelSpec kernel{KernelFamily::exponential_l2, 0.1};
  const SamplePool pool = build_pool(four_mode_toy(), pool_size, 21);
  const QuerySet qs = build_queries(QueryScheme::from_p, query_count,
                                    four_mode_toy(), 0.5, 22);
  const std::size_t dim = pool.points.cols();

  std::ostringstream detail_out;
  std::size_t checked = 0;
  double worst = 0.0;
  for (std::size_t q = 0; q < query_count; ++q) {
    const auto query = qs.queries.row(q);
    const TargetCentroid target = target_centroid(query, pool.points, kernel);
    const LeadingBias lead = leading_bias(query, pool.points, kernel);
    if (lead.norm < 1e-6) continue;  // relative comparison is ill-posed

    detail::PoolWeights pw;
    detail::pool_log_weights(query, pool.points, kernel, pw);

    for (std::size_t n : ns) {
      TrialAggregate agg;
      agg.init(dim);
      Matrix batch(n, dim);
      Vec lw(n), value;
      RngStream rng = derive_stream(seed, 0x6c656164ULL, q, n);
      for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = rng.uniform_index(pool.points.rows());
          lw[j] = pw.log_w[idx];
          const auto src = pool.points.row(idx);
          std::copy(src.begin(), src.end(), batch.row(j).begin());
        }
        WeightProfile p = normalize(std::move(lw));
        standard_centroid_into(p, batch, value);
        agg.add(value);
        lw = std::move(p.log_weights);
      }
      const BiasNorm bn = bias_corrected_norm(agg, target.value);
      const double scaled = static_cast<double>(n) * bn.corrected;
      const double rel = std::abs(scaled - lead.norm) / lead.norm;
      worst = std::max(worst, rel);
      ++checked;
      if (rel > rel_tol) {
        res.pass = false;
        if (!detail_out.str().empty()) detail_out << "; ";
        detail_out << "query " << q << " n=" << n << ": n*b="
                   << detail::fmt(scaled) << " vs L=" << detail::fmt(lead.norm)
                   << " rel=" << detail::fmt(rel);
      }
    }
  }
  if (res.pass) {
    detail_out << checked << " points, worst rel gap " << detail::fmt(worst)
               << " (tol " << detail::fmt(rel_tol) << ")";
  }
  res.detail = detail_out.str();
  return res;
}

// Softmax weights must not move under a constant shift of the log weights.
// The log-weights are quantized to multiples of 2^-36 so that adding 1e5
// is exact in doubles and the check isolates the normalizer's algebra from
// input rounding.
inline PropertyResult check_shift_invariance(std::size_t cases,
                                             std::uint64_t seed) {
  PropertyResult res{"shift-invariance", true, ""};
  const double shifts[] = {-1e5, 1e5, 17.3};
  const double quant = std::ldexp(1.0, 36);
  std::size_t failures = 0;
  std::string first;
  for (std::size_t c = 0; c < cases; ++c) {
    RngStream rng = derive_stream(seed, 0x73686674ULL, c, 0);
    const std::size_t n = 1 + rng.uniform_index(64);
    const double spread = std::exp(5.0 * rng.uniform01() - 2.0);
    Vec lw = detail::random_log_weights(n, spread, rng);
    for (double& v : lw) v = std::round(v * quant) / quant;
    const WeightProfile base = normalize(lw);
    for (double c_shift : shifts) {
      Vec shifted(n);
      for (std::size_t i = 0; i < n; ++i) shifted[i] = lw[i] + c_shift;
      const WeightProfile moved = normalize(std::move(shifted));
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        diff = std::max(diff, std::abs(moved.alpha[i] - base.alpha[i]));
      if (diff > 1e-12) {
        ++failures;
        if (first.empty())
          first = "case " + std::to_string(c) + " shift " +
                  detail::fmt(c_shift) + ": max alpha diff " + detail::fmt(diff);
      }
    }
  }
  if (failures > 0) {
    res.pass = false;
    res.detail = std::to_string(failures) + " failures; first: " + first;
  } else {
    res.detail = std::to_string(cases) + " cases x 3 shifts";
  }
  return res;
}

// Estimates must ride along with rigid motions of the inputs: translate
// the batch and query together and the estimate translates; rotate them
// and the estimate rotates. Exercises standard, corrected and (when not
// weight-dominated) jackknife paths.
inline PropertyResult check_equivariance(std::size_t cases, std::uint64_t seed) {
  PropertyResult res{"equivariance", true, ""};
  std::size_t failures = 0;
  std::string first;

  const auto estimates = [](const Vec& query, const Matrix& batch,
                            const KernelSpec& kernel, bool with_jack,
                            std::vector<Vec>& out) {
    Vec lw;
    eval_log_weights_into(query, batch, kernel, lw);
    const WeightProfile p = normalize(std::move(lw));
    out.clear();
    Vec v;
    standard_centroid_into(p, batch, v);
    out.push_back(v);
    abc_centroid_into(p, batch, v);
    out.push_back(v);
    if (with_jack && detail::max_alpha(p) <= 1.0 - 1e-6) {
      jackknife_centroid_into(p, batch, v);
      out.push_back(v);
    }
  };

  for (std::size_t c = 0; c < cases; ++c) {
    RngStream rng = derive_stream(seed, 0x65717569ULL, c, 0);
    const std::size_t n = 2 + rng.uniform_index(30);
    const double tau = 0.1 * std::exp(rng.uniform01() * std::log(20.0));
    const KernelSpec kernel{KernelFamily::exponential_l2, tau};
    const Matrix batch = detail::random_matrix(n, 2, 0.8, rng);
    Vec query = {0.5 * rng.normal(), 0.5 * rng.normal()};

    std::vector<Vec> base;
    estimates(query, batch, kernel, true, base);
    const bool with_jack = base.size() == 3;

    // Translation.
    const Vec t = {3.0 * rng.normal(), 3.0 * rng.normal()};
    Matrix shifted = batch;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < 2; ++d) shifted(i, d) += t[d];
    const Vec query_t = {query[0] + t[0], query[1] + t[1]};
    std::vector<Vec> moved;
    estimates(query_t, shifted, kernel, with_jack, moved);

    std::string err;
    for (std::size_t k = 0; k < moved.size() && err.empty(); ++k)
      for (std::size_t d = 0; d < 2; ++d)
        if (std::abs(moved[k][d] - (base[k][d] + t[d])) > 1e-9) {
          err = "translation, estimator " + std::to_string(k) + ": diff " +
                detail::fmt(std::abs(moved[k][d] - (base[k][d] + t[d])));
          break;
        }

    // Rotation about the origin.
    if (err.empty()) {
      const double ang = rng.uniform01() * 2.0 * std::numbers::pi;
      const double cs = std::cos(ang), sn = std::sin(ang);
      Matrix rotated(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        rotated(i, 0) = cs * batch(i, 0) - sn * batch(i, 1);
        rotated(i, 1) = sn * batch(i, 0) + cs * batch(i, 1);
      }
      const Vec query_r = {cs * query[0] - sn * query[1],
                           sn * query[0] + cs * query[1]};
      std::vector<Vec> turned;
      estimates(query_r, rotated, kernel, with_jack, turned);
      for (std::size_t k = 0; k < turned.size() && err.empty(); ++k) {
        const double ex = cs * base[k][0] - sn * base[k][1];
        const double ey = sn * base[k][0] + cs * base[k][1];
        if (std::abs(turned[k][0] - ex) > 1e-9 ||
            std::abs(turned[k][1] - ey) > 1e-9)
          err = "rotation, estimator " + std::to_string(k);
      }
    }

    if (!err.empty()) {
      ++failures;
      if (first.empty()) first = "case " + std::to_string(c) + ": " + err;
    }
  }
  if (failures > 0) {
    res.pass = false;
    res.detail = std::to_string(failures) + " failures; first: " + first;
  } else {
    res.detail = std::to_string(cases) + " cases";
  }
  return res;
}

// The weight-dispersion factor lambda is at least one and cannot shrink as
// the kernel sharpens (smaller tau concentrates weight, never spreads it).
inline PropertyResult check_lambda_monotone(std::size_t query_count,
                                            std::uint64_t seed) {
  PropertyResult res{"lambda-monotone", true, ""};
  const SamplePool pool = build_pool(four_mode_toy(), 20000, 11);
  const QuerySet qs = build_queries(QueryScheme::from_p, query_count,
                                    four_mode_toy(), 0.5, seed);
  const double taus[] = {2.0, 1.0, 0.5, 0.25, 0.1, 0.05};
  const std::size_t n = 64;
  std::string first;
  std::size_t failures = 0;
  double lambda_max = 0.0;
  for (std::size_t q = 0; q < query_count; ++q) {
    const auto query = qs.queries.row(q);
    double prev = 0.0;
    for (double tau : taus) {
      const EffectiveSampleSize ess = effective_sample_size(
          query, pool.points, KernelSpec{KernelFamily::exponential_l2, tau}, n);
      std::string err;
      if (ess.lambda < 1.0 - 1e-12)
        err = "lambda " + detail::fmt(ess.lambda) + " below 1";
      else if (ess.lambda < prev - 1e-12 * prev)
        err = "lambda dropped from " + detail::fmt(prev) + " to " +
              detail::fmt(ess.lambda) + " as tau fell to " + detail::fmt(tau);
      else if (std::abs(ess.n_eff * ess.lambda - static_cast<double>(n)) >
               1e-9 * static_cast<double>(n))
        err = "n_eff * lambda != n";
      if (!err.empty()) {
        ++failures;
        if (first.empty())
          first = "query " + std::to_string(q) + ", tau " + detail::fmt(tau) +
                  ": " + err;
      }
      prev = ess.lambda;
      lambda_max = std::max(lambda_max, ess.lambda);
    }
  }
  if (failures > 0) {
    res.pass = false;
    res.detail = std::to_string(failures) + " failures; first: " + first;
  } else {
    res.detail = std::to_string(query_count) + " queries x 6 taus, max lambda " +
                 detail::fmt(lambda_max);
  }
  return res;
}

// The scaling report must not depend on how many workers computed it. Runs
// a small experiment at several worker counts with timing disabled and
// compares every serialized output byte for byte.
inline PropertyResult check_worker_determinism() {
  PropertyResult res{"worker-determinism", true, ""};
  ExperimentConfig cfg;
  cfg.pool_spec = four_mode_toy();
  cfg.pool_size = 2000;
  cfg.pool_seed = 5;
  cfg.query_scheme = QueryScheme::from_p;
  cfg.query_count = 4;
  cfg.query_seed = 6;
  cfg.kernel = {KernelFamily::exponential_l2, 0.1};
  cfg.n_grid = {8, 16};
  cfg.trials = 50;
  cfg.methods = {Method::standard, Method::abc, Method::jackknife,
                 Method::bootstrap, Method::brsnis};
  cfg.master_seed = 99;
  cfg.measure_time = false;

  std::string reference_csv, reference_json, reference_pq;
  const std::size_t worker_counts[] = {1, 4, 8};
  for (std::size_t w : worker_counts) {
    const ScalingReport rep = run_scaling_experiment(cfg, w);
    std::ostringstream csv, pq;
    write_scaling_csv(rep, csv);
    write_per_query_csv(rep, pq);
    const std::string json = report_to_json(rep).dump(2);
    if (reference_csv.empty()) {
      reference_csv = csv.str();
      reference_json = json;
      reference_pq = pq.str();
    } else if (csv.str() != reference_csv || json != reference_json ||
               pq.str() != reference_pq) {
      res.pass = false;
      res.detail = "outputs differ between workers=1 and workers=" +
                   std::to_string(w);
      return res;
    }
  }
  res.detail = "identical outputs at workers {1, 4, 8}";
  return res;
}

struct PropertySuiteOptions {
  std::uint64_t seed = 9001;
  std::size_t hull_cases = 200;
  std::size_t identity_cases = 100;
  std::size_t invariance_cases = 200;
  std::size_t zero_bias_trials = 20000;
  std::size_t n1_trials = 100000;
  std::size_t leading_trials = 200000;
  std::size_t leading_queries = 4;
  double leading_rel_tol = 0.15;
  bool break_abc = false;          // inject a sign-flipped correction
  std::vector<std::string> only;   // empty runs everything
};

inline std::vector<PropertyResult> run_property_suite(
    const PropertySuiteOptions& opt) {
  AbcFn fn;
  if (opt.break_abc) {
    // Deliberately wrong: adds the correction instead of subtracting it.
    // Exists so "this suite would catch a broken estimator" is testable.
    fn = [](const WeightProfile& w, MatrixView batch, Vec& out) {
      Vec corrected;
      abc_centroid_into(w, batch, corrected);
      Vec plain;
      standard_centroid_into(w, batch, plain);
      out.assign(batch.cols, 0.0);
      for (std::size_t d = 0; d < batch.cols; ++d)
        out[d] = 2.0 * plain[d] - corrected[d];
    };
  }

  const auto wanted = [&](const char* name) {
    if (opt.only.empty()) return true;
    return std::find(opt.only.begin(), opt.only.end(), name) != opt.only.end();
  };

  std::vector<PropertyResult> out;
  if (wanted("zero-bias-fixtures"))
    out.push_back(check_zero_bias_fixtures(opt.seed, opt.zero_bias_trials));
  if (wanted("convex-hull"))
    out.push_back(check_convex_hull(opt.hull_cases, opt.seed, fn));
  if (wanted("jackknife-identity"))
    out.push_back(check_jackknife_identity(opt.identity_cases, opt.seed));
  if (wanted("n1-bias")) out.push_back(check_n1_bias(opt.seed, opt.n1_trials));
  if (wanted("leading-constant"))
    out.push_back(check_leading_constant(opt.seed, opt.leading_trials, {256},
                                         opt.leading_queries,
                                         opt.leading_rel_tol));
  if (wanted("shift-invariance"))
    out.push_back(check_shift_invariance(opt.invariance_cases, opt.seed));
  if (wanted("equivariance"))
    out.push_back(check_equivariance(opt.invariance_cases, opt.seed));
  if (wanted("lambda-monotone"))
    out.push_back(check_lambda_monotone(8, opt.seed));
  if (wanted("worker-determinism")) out.push_back(check_worker_determinism());
  return out;
}

inline const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {
      "zero-bias-fixtures", "convex-hull",      "jackknife-identity",
      "n1-bias",            "leading-constant", "shift-invariance",
      "equivariance",       "lambda-monotone",  "worker-determinism"};
  return names;
}

}  // namespace snisabc
