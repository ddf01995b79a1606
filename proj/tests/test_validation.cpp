#include <catch2/catch_amalgamated.hpp>

#include "snisabc/validation.hpp"

using namespace snisabc;

TEST_CASE("zero-bias fixtures pass at a small trial budget") {
  const PropertyResult r = check_zero_bias_fixtures(101, 4000);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("convex hull sweep passes and catches a broken correction") {
  const PropertyResult good = check_convex_hull(60, 7);
  INFO(good.detail);
  CHECK(good.pass);

  const AbcFn broken = [](const WeightProfile& w, MatrixView batch, Vec& out) {
    Vec corrected, plain;
    abc_centroid_into(w, batch, corrected);
    standard_centroid_into(w, batch, plain);
    out.resize(batch.cols);
    for (std::size_t d = 0; d < batch.cols; ++d)
      out[d] = 2.0 * plain[d] - corrected[d];  // adds the drift instead
  };
  const PropertyResult bad = check_convex_hull(60, 7, broken);
  INFO(bad.detail);
  CHECK(!bad.pass);
}

TEST_CASE("jackknife identity against brute-force leave-one-out") {
  const PropertyResult r = check_jackknife_identity(40, 11);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("shift invariance sweep") {
  const PropertyResult r = check_shift_invariance(60, 13);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("rigid-motion equivariance sweep") {
  const PropertyResult r = check_equivariance(60, 17);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("dispersion factor monotonicity") {
  const PropertyResult r = check_lambda_monotone(4, 19);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("single-draw bias matches the closed form") {
  const PropertyResult r = check_n1_bias(23, 40000);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("worker determinism of serialized reports") {
  const PropertyResult r = check_worker_determinism();
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("suite respects the property filter") {
  PropertySuiteOptions opt;
  opt.only = {"convex-hull"};
  opt.hull_cases = 10;
  const auto results = run_property_suite(opt);
  REQUIRE(results.size() == 1);
  CHECK(results[0].name == "convex-hull");
  CHECK(results[0].pass);
}

TEST_CASE("break-abc option fails the hull check through the suite") {
  PropertySuiteOptions opt;
  opt.only = {"convex-hull"};
  opt.hull_cases = 10;
  opt.break_abc = true;
  const auto results = run_property_suite(opt);
  REQUIRE(results.size() == 1);
  CHECK(!results[0].pass);
}

TEST_CASE("every advertised property name runs") {
  PropertySuiteOptions opt;
  opt.hull_cases = 5;
  opt.identity_cases = 5;
  opt.invariance_cases = 5;
  opt.zero_bias_trials = 500;
  opt.n1_trials = 2000;
  opt.leading_trials = 0;  // structure only; the statistical checks above
  opt.only = {"convex-hull", "jackknife-identity", "shift-invariance",
              "equivariance", "lambda-monotone"};
  const auto results = run_property_suite(opt);
  CHECK(results.size() == 5);
  for (const auto& r : results) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}
