#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "snisabc/errors.hpp"
#include "snisabc/estimators.hpp"
#include "snisabc/kernel.hpp"
#include "snisabc/matrix.hpp"
#include "snisabc/rng.hpp"

using namespace snisabc;
using Catch::Approx;

namespace {

// One-dimensional two-point fixture with x = 0, tau = 1: log weights (0, -1).
// All expected values below are hand-derived from the closed forms.
struct TwoPoint {
  Matrix batch = Matrix::from_rows({{0.0}, {1.0}});
  WeightProfile profile = normalize({0.0, -1.0});
};

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::standard, Method::abc, Method::jackknife,
                   Method::bootstrap, Method::brsnis}) {
    const auto back = method_from_string(to_string(m));
    REQUIRE(back.has_value());
    CHECK(*back == m);
  }
  CHECK(!method_from_string("banana").has_value());
}

TEST_CASE("standard centroid on the two-point fixture") {
  TwoPoint f;
  const CentroidEstimate e = standard_centroid(f.profile, f.batch);
  REQUIRE(e.value.size() == 1);
  CHECK(e.value[0] == Approx(0.2689414213699951).epsilon(1e-15));
  CHECK(e.method == Method::standard);
  CHECK(e.extra_samples_consumed == 0);
}

TEST_CASE("corrected centroid subtracts the weight-concentration drift") {
  TwoPoint f;
  Vec out;
  abc_centroid_into(f.profile, f.batch, out);
  // delta = sum alpha_i^2 (T - y_i) = 0.0908577476729484
  CHECK(out[0] == Approx(0.1780836736970467).epsilon(1e-14));
}

TEST_CASE("hull weights of the corrected centroid") {
  TwoPoint f;
  const Vec gamma = abc_hull_weights(f.profile);
  REQUIRE(gamma.size() == 2);
  CHECK(gamma[0] == Approx(0.8219163263029533).epsilon(1e-14));
  CHECK(gamma[1] == Approx(0.1780836736970467).epsilon(1e-14));
  CHECK(gamma[0] + gamma[1] == Approx(1.0).margin(1e-14));
  // the hull combination reproduces the corrected point
  CHECK(gamma[1] * 1.0 == Approx(0.1780836736970467).epsilon(1e-14));
}

TEST_CASE("jackknife closed form on the two-point fixture") {
  TwoPoint f;
  Vec out;
  jackknife_centroid_into(f.profile, f.batch, out);
  // LOO values are the opposite point: T_{-0} = 1, T_{-1} = 0.
  // 2 T - (T_{-0} + T_{-1}) / 2 = 0.0378828427399902
  CHECK(out[0] == Approx(0.0378828427399902).epsilon(1e-13));
}

TEST_CASE("jackknife guards") {
  SECTION("needs two points") {
    const Matrix batch = Matrix::from_rows({{0.5}});
    const WeightProfile p = normalize({0.0});
    Vec out;
    CHECK_THROWS_AS(jackknife_centroid_into(p, batch, out), InsufficientSamples);
  }
  SECTION("dominated weight is refused, not extrapolated") {
    const Matrix batch = Matrix::from_rows({{0.0}, {1.0}});
    const WeightProfile p = normalize({0.0, -100.0});
    Vec out;
    CHECK_THROWS_AS(jackknife_centroid_into(p, batch, out), DominatedWeight);
  }
}

TEST_CASE("profile and batch sizes must agree") {
  const Matrix batch = Matrix::from_rows({{0.0}, {1.0}, {2.0}});
  const WeightProfile p = normalize({0.0, -1.0});
  Vec out;
  CHECK_THROWS_AS(standard_centroid_into(p, batch, out), InvalidInput);
  CHECK_THROWS_AS(abc_centroid_into(p, batch, out), InvalidInput);
  CHECK_THROWS_AS(jackknife_centroid_into(p, batch, out), InvalidInput);
}

TEST_CASE("bootstrap with an identity resample returns the plain estimate") {
  TwoPoint f;
  // Find a seed whose first two index draws hit both points; the only
  // replicate then has the same weight multiset as the batch, so the
  // debiased value collapses to T_n exactly.
  std::uint64_t seed = 0;
  for (;; ++seed) {
    RngStream probe(seed);
    const std::size_t i0 = probe.uniform_index(2);
    const std::size_t i1 = probe.uniform_index(2);
    if (i0 != i1) break;
    REQUIRE(seed < 1000);
  }
  RngStream rng(seed);
  const CentroidEstimate e =
      bootstrap_centroid(f.profile, f.batch, BootstrapSpec{1}, rng);
  CHECK(e.value[0] == Approx(0.2689414213699951).epsilon(1e-15));
}

TEST_CASE("bootstrap is deterministic given the stream") {
  TwoPoint f;
  RngStream r1(77), r2(77), r3(78);
  const Vec a = bootstrap_centroid(f.profile, f.batch, {}, r1).value;
  const Vec b = bootstrap_centroid(f.profile, f.batch, {}, r2).value;
  const Vec c = bootstrap_centroid(f.profile, f.batch, {}, r3).value;
  CHECK(a[0] == b[0]);
  CHECK(a[0] != c[0]);
}

TEST_CASE("bootstrap default replicate count") {
  CHECK(BootstrapSpec{}.replicates == 100);
  CHECK_THROWS_AS(validate(BootstrapSpec{0}), InvalidInput);
}

TEST_CASE("bootstrap replicate mean stays inside the batch hull") {
  // With points {0, 1} every replicate centroid lies in [0, 1], so the
  // debiased estimate lies within 2 T_n - [0, 1].
  TwoPoint f;
  RngStream rng(5);
  const CentroidEstimate e =
      bootstrap_centroid(f.profile, f.batch, BootstrapSpec{50}, rng);
  const double t = 0.2689414213699951;
  CHECK(e.value[0] >= 2 * t - 1.0);
  CHECK(e.value[0] <= 2 * t);
}

TEST_CASE("iterated resampling baseline") {
  const KernelSpec kernel{KernelFamily::exponential_l2, 1.0};
  const Vec x = {0.0, 0.0};

  SECTION("constant sampler collapses to the constant") {
    std::size_t consumed = 0;
    const FreshSampler constant = [&](RngStream&, std::size_t count, Matrix& out) {
      out.resize(count, 2);
      for (std::size_t i = 0; i < count; ++i) {
        out(i, 0) = 0.25;
        out(i, 1) = -0.5;
      }
      consumed += count;
    };
    RngStream rng(3);
    const CentroidEstimate e =
        brsnis_centroid(x, 8, constant, BrSnisSpec{10, 1}, kernel, rng);
    CHECK(e.value[0] == Approx(0.25).margin(1e-12));
    CHECK(e.value[1] == Approx(-0.5).margin(1e-12));
    // one state draw plus K batches of n-1
    CHECK(consumed == 1 + 10 * 7);
    CHECK(e.extra_samples_consumed == 10 * 7 + 1 - 8);
    CHECK(brsnis_extra_samples(8, BrSnisSpec{10, 1}) == 63);
  }

  SECTION("deterministic given the stream") {
    const FreshSampler gaussian = [](RngStream& rng, std::size_t count,
                                     Matrix& out) {
      out.resize(count, 2);
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t d = 0; d < 2; ++d) out(i, d) = rng.normal();
    };
    RngStream r1(9), r2(9);
    BrSnisScratch s1, s2;
    Vec a, b;
    brsnis_centroid_into(x, 6, gaussian, BrSnisSpec{5, 1}, kernel, r1, s1, a);
    brsnis_centroid_into(x, 6, gaussian, BrSnisSpec{5, 1}, kernel, r2, s2, b);
    CHECK(a == b);
  }

  SECTION("sampler exhaustion propagates") {
    std::size_t budget = 10;
    const FreshSampler limited = [&](RngStream&, std::size_t count, Matrix& out) {
      if (count > budget) throw InsufficientSamples("reference draws exhausted");
      budget -= count;
      out.resize(count, 2);
      for (std::size_t i = 0; i < count; ++i) {
        out(i, 0) = 0.0;
        out(i, 1) = 0.0;
      }
    };
    RngStream rng(4);
    BrSnisScratch s;
    Vec out;
    CHECK_THROWS_AS(brsnis_centroid_into(x, 8, limited, BrSnisSpec{10, 1},
                                         kernel, rng, s, out),
                    InsufficientSamples);
  }

  SECTION("iteration budget must exceed burn-in") {
    CHECK_THROWS_AS(validate(BrSnisSpec{1, 1}), InvalidInput);
    CHECK_THROWS_AS(validate(BrSnisSpec{0, 0}), InvalidInput);
    CHECK_NOTHROW(validate(BrSnisSpec{2, 1}));
  }
}

TEST_CASE("corrected estimate never leaves the batch hull on random profiles") {
  RngStream rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.uniform_index(20);
    Vec lw(n);
    const double spread = std::exp(4.0 * rng.uniform01() - 1.0);
    for (double& v : lw) v = spread * rng.normal();
    Matrix batch(n, 1);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
      batch(i, 0) = rng.normal();
      lo = std::min(lo, batch(i, 0));
      hi = std::max(hi, batch(i, 0));
    }
    Vec out;
    abc_centroid_into(normalize(std::move(lw)), batch, out);
    CHECK(out[0] >= lo - 1e-12);
    CHECK(out[0] <= hi + 1e-12);
  }
}
