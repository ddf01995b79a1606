#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "snisabc/distributions.hpp"
#include "snisabc/errors.hpp"

using namespace snisabc;
using Catch::Approx;
namespace fs = std::filesystem;

TEST_CASE("four-mode toy spec") {
  const GaussianMixtureSpec spec = four_mode_toy();
  REQUIRE(spec.centers.rows() == 4);
  REQUIRE(spec.centers.cols() == 2);
  CHECK(spec.sigma == 0.1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(spec.centers(i, 0)) == 0.5);
    CHECK(std::abs(spec.centers(i, 1)) == 0.5);
  }
  REQUIRE(spec.mode_probs.size() == 4);
  for (double p : spec.mode_probs) CHECK(p == 0.25);
  CHECK_NOTHROW(validate(spec));
}

TEST_CASE("mixture spec validation") {
  GaussianMixtureSpec spec = four_mode_toy();
  SECTION("sigma must be positive") {
    spec.sigma = 0.0;
    CHECK_THROWS_AS(validate(spec), InvalidInput);
  }
  SECTION("probabilities must match the center count") {
    spec.mode_probs = {0.5, 0.5};
    CHECK_THROWS_AS(validate(spec), InvalidInput);
  }
  SECTION("probabilities must sum to one") {
    spec.mode_probs = {0.3, 0.3, 0.3, 0.3};
    CHECK_THROWS_AS(validate(spec), InvalidInput);
  }
  SECTION("probabilities must be nonnegative") {
    spec.mode_probs = {0.5, 0.5, 0.5, -0.5};
    CHECK_THROWS_AS(validate(spec), InvalidInput);
  }
  SECTION("empty probabilities mean uniform") {
    spec.mode_probs.clear();
    CHECK_NOTHROW(validate(spec));
  }
  SECTION("no centers") {
    spec.centers = Matrix();
    spec.mode_probs.clear();
    CHECK_THROWS_AS(validate(spec), InvalidInput);
  }
}

TEST_CASE("pool construction is deterministic and well distributed") {
  const GaussianMixtureSpec spec = four_mode_toy();
  const SamplePool a = build_pool(spec, 20000, 1);
  const SamplePool b = build_pool(spec, 20000, 1);
  const SamplePool c = build_pool(spec, 20000, 2);
  CHECK(a.points == b.points);
  CHECK(!(a.points == c.points));
  REQUIRE(a.points.rows() == 20000);
  REQUIRE(a.points.cols() == 2);

  // Mixture of four symmetric modes: mean 0, per-coordinate variance
  // 0.25 + sigma^2 = 0.26. Allow 5 standard errors.
  for (std::size_t d = 0; d < 2; ++d) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.points.rows(); ++i) {
      mean += a.points(i, d);
      sq += a.points(i, d) * a.points(i, d);
    }
    mean /= static_cast<double>(a.points.rows());
    const double var = sq / static_cast<double>(a.points.rows()) - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(0.26 / 20000.0));
    CHECK(std::abs(var - 0.26) < 0.02);
  }
}

TEST_CASE("weighted mode probabilities are honored") {
  GaussianMixtureSpec spec = four_mode_toy();
  spec.mode_probs = {0.7, 0.1, 0.1, 0.1};
  const SamplePool pool = build_pool(spec, 40000, 3);
  // Count points nearest the heavy mode (0.5, 0.5): sigma is small relative
  // to the mode spacing, so nearest-center assignment is almost exact.
  std::size_t heavy = 0;
  for (std::size_t i = 0; i < pool.points.rows(); ++i) {
    double best = 1e300;
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      const double dx = pool.points(i, 0) - spec.centers(c, 0);
      const double dy = pool.points(i, 1) - spec.centers(c, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    if (best_c == 0) ++heavy;
  }
  const double frac = static_cast<double>(heavy) / 40000.0;
  CHECK(std::abs(frac - 0.7) < 0.02);
}

TEST_CASE("query generation") {
  const GaussianMixtureSpec spec = four_mode_toy();
  SECTION("from the mixture") {
    const QuerySet qs = build_queries(QueryScheme::from_p, 50, spec, 0.5, 2);
    REQUIRE(qs.queries.rows() == 50);
    REQUIRE(qs.queries.cols() == 2);
    const QuerySet again = build_queries(QueryScheme::from_p, 50, spec, 0.5, 2);
    CHECK(qs.queries == again.queries);
  }
  SECTION("isotropic scale is honored") {
    const QuerySet qs =
        build_queries(QueryScheme::isotropic_gaussian, 20000, spec, 0.5, 4);
    double sq = 0.0;
    for (std::size_t i = 0; i < qs.queries.rows(); ++i)
      for (std::size_t d = 0; d < 2; ++d) sq += qs.queries(i, d) * qs.queries(i, d);
    const double var = sq / (2.0 * 20000.0);
    CHECK(var == Approx(0.25).margin(0.01));
  }
  SECTION("isotropic scale must be positive") {
    CHECK_THROWS_AS(
        build_queries(QueryScheme::isotropic_gaussian, 5, spec, 0.0, 4),
        InvalidInput);
  }
  SECTION("scheme names") {
    CHECK(std::string(to_string(QueryScheme::from_p)) == "from-p");
    CHECK(std::string(to_string(QueryScheme::isotropic_gaussian)) ==
          "isotropic-gaussian");
  }
}

TEST_CASE("minibatch draws") {
  const SamplePool pool = build_pool(four_mode_toy(), 100, 5);
  RngStream rng = derive_stream(3, 0, 0, 0);
  Matrix batch;
  std::vector<std::size_t> idx;

  SECTION("with replacement gathers the right rows") {
    draw_minibatch_into(pool.points, 16, true, rng, batch, &idx);
    REQUIRE(batch.rows() == 16);
    REQUIRE(idx.size() == 16);
    for (std::size_t j = 0; j < 16; ++j) {
      REQUIRE(idx[j] < 100);
      for (std::size_t d = 0; d < 2; ++d)
        CHECK(batch(j, d) == pool.points(idx[j], d));
    }
  }

  SECTION("without replacement gives distinct indices") {
    draw_minibatch_into(pool.points, 40, false, rng, batch, &idx);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    CHECK(unique.size() == 40);
    for (std::size_t j : idx) REQUIRE(j < 100);
  }

  SECTION("full-pool draw is a permutation") {
    draw_minibatch_into(pool.points, 100, false, rng, batch, &idx);
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> expect(100);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
  }

  SECTION("oversized draw without replacement fails") {
    CHECK_THROWS_AS(draw_minibatch_into(pool.points, 101, false, rng, batch),
                    InsufficientSamples);
  }

  SECTION("empty requests fail") {
    CHECK_THROWS_AS(draw_minibatch_into(pool.points, 0, true, rng, batch),
                    InvalidInput);
    const Matrix empty;
    CHECK_THROWS_AS(draw_minibatch_into(empty, 4, true, rng, batch),
                    InvalidInput);
  }

  SECTION("deterministic per stream") {
    RngStream r1 = derive_stream(3, 1, 2, 0);
    RngStream r2 = derive_stream(3, 1, 2, 0);
    Matrix b1, b2;
    draw_minibatch_into(pool.points, 8, true, r1, b1);
    draw_minibatch_into(pool.points, 8, true, r2, b2);
    CHECK(b1 == b2);
  }

  SECTION("wrapper draws from the pool points") {
    RngStream r = derive_stream(3, 9, 9, 9);
    const Matrix b = draw_minibatch(pool, 8, true, r);
    CHECK(b.rows() == 8);
    CHECK(b.cols() == 2);
  }
}

TEST_CASE("pool and query serialization round-trips") {
  const fs::path dir = fs::temp_directory_path() / "snisabc_io_test";
  fs::create_directories(dir);

  SECTION("pool") {
    GaussianMixtureSpec spec = four_mode_toy();
    spec.mode_probs = {0.1, 0.2, 0.3, 0.4};
    const SamplePool pool = build_pool(spec, 500, 17);
    const fs::path file = dir / "pool.bin";
    save_pool(pool, file);
    const SamplePool back = load_pool(file);
    CHECK(back.points == pool.points);
    CHECK(back.seed == pool.seed);
    CHECK(back.source_spec.centers == pool.source_spec.centers);
    CHECK(back.source_spec.sigma == pool.source_spec.sigma);
    CHECK(back.source_spec.mode_probs == pool.source_spec.mode_probs);
  }

  SECTION("queries") {
    const QuerySet qs =
        build_queries(QueryScheme::isotropic_gaussian, 64, four_mode_toy(), 0.7, 9);
    const fs::path file = dir / "queries.bin";
    save_queries(qs, file);
    const QuerySet back = load_queries(file);
    CHECK(back.queries == qs.queries);
    CHECK(back.scheme == qs.scheme);
    CHECK(back.scale == qs.scale);
    CHECK(back.seed == qs.seed);
  }

  SECTION("truncated file is rejected") {
    const SamplePool pool = build_pool(four_mode_toy(), 100, 1);
    const fs::path file = dir / "trunc.bin";
    save_pool(pool, file);
    const auto size = fs::file_size(file);
    fs::resize_file(file, size / 2);
    CHECK_THROWS(load_pool(file));
  }

  SECTION("garbage magic is rejected") {
    const fs::path file = dir / "bad.bin";
    std::ofstream(file, std::ios::binary) << "not a pool file at all";
    CHECK_THROWS(load_pool(file));
  }

  fs::remove_all(dir);
}
