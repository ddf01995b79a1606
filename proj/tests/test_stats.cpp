#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "snisabc/errors.hpp"
#include "snisabc/stats.hpp"

using namespace snisabc;
using Catch::Approx;

TEST_CASE("trial aggregate accumulates moments") {
  TrialAggregate agg;
  agg.init(2);
  agg.add(Vec{1.0, 2.0});
  agg.add(Vec{3.0, -2.0});
  agg.add(Vec{5.0, 0.0});
  CHECK(agg.count == 3);
  CHECK(agg.sum[0] == 9.0);
  CHECK(agg.sum[1] == 0.0);
  CHECK(agg.sum_sq[0] == 35.0);
  CHECK(agg.sum_sq[1] == 8.0);
}

TEST_CASE("corrected norm removes the noise floor") {
  // Two samples (1, 0) and (3, 0) against target (0, 0): mean (2, 0),
  // naive norm 2, per-coordinate variance (2, 0), corrected^2 = 4 - 2/2.
  TrialAggregate agg;
  agg.init(2);
  agg.add(Vec{1.0, 0.0});
  agg.add(Vec{3.0, 0.0});
  const BiasNorm bn = bias_corrected_norm(agg, Vec{0.0, 0.0});
  CHECK(bn.naive == Approx(2.0).epsilon(1e-15));
  CHECK(bn.trace_cov == Approx(2.0).epsilon(1e-15));
  CHECK(bn.corrected == Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(!bn.clamped);
  CHECK(bn.se_corrected > 0.0);
}

TEST_CASE("noise-dominated estimates clamp to zero") {
  TrialAggregate agg;
  agg.init(1);
  agg.add(Vec{1.0});
  agg.add(Vec{-1.0});
  const BiasNorm bn = bias_corrected_norm(agg, Vec{0.0});
  CHECK(bn.naive == 0.0);
  CHECK(bn.corrected == 0.0);
  CHECK(bn.clamped);
  CHECK(bn.se_corrected > 0.0);
}

TEST_CASE("corrected norm of an exact measurement") {
  // Identical samples: zero variance, corrected equals naive.
  TrialAggregate agg;
  agg.init(1);
  agg.add(Vec{0.5});
  agg.add(Vec{0.5});
  agg.add(Vec{0.5});
  const BiasNorm bn = bias_corrected_norm(agg, Vec{0.0});
  CHECK(bn.naive == Approx(0.5).epsilon(1e-15));
  CHECK(bn.corrected == Approx(0.5).epsilon(1e-12));
  CHECK(bn.trace_cov == Approx(0.0).margin(1e-15));
}

TEST_CASE("corrected norm needs two samples") {
  TrialAggregate agg;
  agg.init(1);
  agg.add(Vec{1.0});
  CHECK_THROWS_AS(bias_corrected_norm(agg, Vec{0.0}), InvalidInput);
}

TEST_CASE("slope fit recovers an exact power law") {
  // v = 32 n^-2 through (2, 8), (4, 2), (8, 0.5).
  const Vec ns = {2.0, 4.0, 8.0};
  const Vec vals = {8.0, 2.0, 0.5};
  const SlopeFit fit = fit_slope(ns, vals);
  CHECK(fit.slope == Approx(-2.0).epsilon(1e-12));
  CHECK(fit.intercept == Approx(3.4657359027997265).epsilon(1e-12));
  CHECK(fit.stderr_slope == Approx(0.0).margin(1e-10));
  CHECK(fit.points == 3);
}

TEST_CASE("slope fit with scatter reports a positive standard error") {
  const Vec ns = {2.0, 4.0, 8.0, 16.0};
  const Vec vals = {8.1, 1.9, 0.53, 0.12};
  const SlopeFit fit = fit_slope(ns, vals);
  CHECK(fit.slope < -1.5);
  CHECK(fit.slope > -2.5);
  CHECK(fit.stderr_slope > 0.0);
}

TEST_CASE("slope fit input validation") {
  CHECK_THROWS_AS(fit_slope(Vec{2.0, 4.0}, Vec{1.0, 0.5}), InvalidInput);
  CHECK_THROWS_AS(fit_slope(Vec{2.0, 4.0, 8.0}, Vec{1.0, 0.0, 0.5}),
                  InvalidInput);
  CHECK_THROWS_AS(fit_slope(Vec{2.0, 4.0, 8.0}, Vec{1.0, -0.5, 0.5}),
                  InvalidInput);
  CHECK_THROWS_AS(fit_slope(Vec{2.0, 4.0, 8.0}, Vec{1.0, 0.5}), InvalidInput);
}
