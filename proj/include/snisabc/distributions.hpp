#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "snisabc/errors.hpp"
#include "snisabc/matrix.hpp"
#include "snisabc/rng.hpp"

namespace snisabc {

// Isotropic Gaussian mixture: pick a mode by mode_probs, then add
// sigma * standard normal per coordinate to its center.
struct GaussianMixtureSpec {
  Matrix centers;  // K x D
  double sigma = 0.1;
  Vec mode_probs;  // K entries summing to 1; empty means uniform
};

inline void validate(const GaussianMixtureSpec& spec) {
  if (spec.centers.rows() == 0 || spec.centers.cols() == 0)
    throw InvalidInput("mixture: need at least one center with dimension >= 1");
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma))
    throw InvalidInput("mixture: sigma must be finite and > 0");
  for (std::size_t i = 0; i < spec.centers.rows(); ++i)
    for (double v : spec.centers.row(i))
      if (!std::isfinite(v)) throw InvalidInput("mixture: non-finite center");
  if (!spec.mode_probs.empty()) {
    if (spec.mode_probs.size() != spec.centers.rows())
      throw InvalidInput("mixture: mode_probs size does not match centers");
    double total = 0.0;
    for (double p : spec.mode_probs) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw InvalidInput("mixture: mode_probs entries must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw InvalidInput("mixture: mode_probs sum to " + std::to_string(total) +
                         ", expected 1 within 1e-12");
  }
}

// Four isotropic modes at (+-0.5, +-0.5), equal probabilities.
inline GaussianMixtureSpec four_mode_toy(double sigma = 0.1) {
  GaussianMixtureSpec spec;
  spec.centers = Matrix::from_rows(
      {{0.5, 0.5}, {0.5, -0.5}, {-0.5, 0.5}, {-0.5, -0.5}});
  spec.sigma = sigma;
  spec.mode_probs = {0.25, 0.25, 0.25, 0.25};
  return spec;
}

struct SamplePool {
  Matrix points;  // N x D
  GaussianMixtureSpec source_spec;
  std::uint64_t seed = 0;
};

enum class QueryScheme { from_p, isotropic_gaussian };

inline const char* to_string(QueryScheme s) {
  return s == QueryScheme::from_p ? "from-p" : "isotropic-gaussian";
}

struct QuerySet {
  Matrix queries;  // Q x D
  QueryScheme scheme = QueryScheme::from_p;
  double scale = 0.5;  // isotropic-gaussian only
  std::uint64_t seed = 0;
};

namespace detail {

inline std::size_t pick_mode(const GaussianMixtureSpec& spec, RngStream& rng) {
  const std::size_t k = spec.centers.rows();
  if (spec.mode_probs.empty()) return rng.uniform_index(k);
  const double u = rng.uniform01();
  double cum = 0.0;
  for (std::size_t m = 0; m + 1 < k; ++m) {
    cum += spec.mode_probs[m];
    if (u < cum) return m;
  }
  return k - 1;
}

inline void sample_mixture_rows(const GaussianMixtureSpec& spec, std::size_t count,
                                RngStream& rng, Matrix& out) {
  const std::size_t d_dim = spec.centers.cols();
  out.resize(count, d_dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t mode = pick_mode(spec, rng);
    const auto center = spec.centers.row(mode);
    for (std::size_t d = 0; d < d_dim; ++d)
      out(i, d) = center[d] + spec.sigma * rng.normal();
  }
}

}  // namespace detail

// Deterministic in (spec, count, seed): rebuilding reproduces the identical
// matrix bit for bit.
inline SamplePool build_pool(const GaussianMixtureSpec& spec, std::size_t count,
                             std::uint64_t seed) {
  validate(spec);
  if (count == 0) throw InvalidInput("build_pool: count must be >= 1");
  SamplePool pool;
  pool.source_spec = spec;
  pool.seed = seed;
  RngStream rng = derive_stream(seed, 0x706f6f6cULL, count, 0);
  detail::sample_mixture_rows(spec, count, rng, pool.points);
  return pool;
}

inline QuerySet build_queries(QueryScheme scheme, std::size_t count,
                              const GaussianMixtureSpec& spec, double scale,
                              std::uint64_t seed) {
  validate(spec);
  if (count == 0) throw InvalidInput("build_queries: count must be >= 1");
  QuerySet qs;
  qs.scheme = scheme;
  qs.scale = scale;
  qs.seed = seed;
  RngStream rng = derive_stream(seed, 0x71756572ULL, count, 1);
  if (scheme == QueryScheme::from_p) {
    detail::sample_mixture_rows(spec, count, rng, qs.queries);
  } else {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw InvalidInput("build_queries: isotropic scale must be finite and > 0");
    const std::size_t d_dim = spec.centers.cols();
    qs.queries.resize(count, d_dim);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t d = 0; d < d_dim; ++d)
        qs.queries(i, d) = scale * rng.normal();
  }
  return qs;
}

// Uniform minibatch of n pool rows. Without replacement uses Floyd's
// algorithm, so cost is O(n) even when the pool is large; n == N yields every
// row exactly once. Optionally reports the chosen row indices in draw order.
inline void draw_minibatch_into(const Matrix& pool, std::size_t n, bool replacement,
                                RngStream& rng, Matrix& out,
                                std::vector<std::size_t>* indices = nullptr) {
  const std::size_t pool_n = pool.rows();
  if (pool_n == 0) throw InvalidInput("draw_minibatch: empty pool");
  if (n == 0) throw InvalidInput("draw_minibatch: n must be >= 1");
  if (!replacement && n > pool_n)
    throw InsufficientSamples("draw_minibatch: n = " + std::to_string(n) +
                              " > pool size " + std::to_string(pool_n) +
                              " without replacement");
  const std::size_t d_dim = pool.cols();
  out.resize(n, d_dim);
  if (indices) indices->clear();
  auto emit = [&](std::size_t row, std::size_t slot) {
    const double* src = pool.data() + row * d_dim;
    double* dst = out.data() + slot * d_dim;
    for (std::size_t d = 0; d < d_dim; ++d) dst[d] = src[d];
    if (indices) indices->push_back(row);
  };
  if (replacement) {
    for (std::size_t j = 0; j < n; ++j) emit(rng.uniform_index(pool_n), j);
  } else {
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(n * 2);
    std::size_t slot = 0;
    for (std::size_t j = pool_n - n; j < pool_n; ++j) {
      const std::size_t t = rng.uniform_index(j + 1);
      const std::size_t pick = chosen.contains(t) ? j : t;
      chosen.insert(pick);
      emit(pick, slot++);
    }
  }
}

inline Matrix draw_minibatch(const SamplePool& pool, std::size_t n, bool replacement,
                             RngStream& rng) {
  Matrix out;
  draw_minibatch_into(pool.points, n, replacement, rng, out);
  return out;
}

// ---- serialization ----------------------------------------------------
//
// Binary layout (little endian), shared by pools and query sets:
//   magic   u32   'SNPB' = 0x42504E53
//   version u32   1
//   kind    u32   0 = pool, 1 = query set
//   D       u32
//   N       u64
//   seed    u64
//   spec block
//     pool:    K u32, sigma f64, centers K*D f64, probs_present u32,
//              mode_probs K f64 (when present)
//     queries: scheme u32, scale f64
//   points  N*D f64, row major

namespace detail {

inline constexpr std::uint32_t kPoolMagic = 0x42504E53u;
inline constexpr std::uint32_t kPoolFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "pool serialization assumes a little-endian host");

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("pool file: truncated or unreadable");
}

inline void write_doubles(std::ofstream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p), sizeof(double) * count);
}

inline void read_doubles(std::ifstream& in, double* p, std::size_t count) {
  in.read(reinterpret_cast<char*>(p), sizeof(double) * count);
  if (!in) throw InvalidInput("pool file: truncated point data");
}

}  // namespace detail

inline void save_pool(const SamplePool& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("save_pool: cannot open " + path.string());
  detail::write_raw(out, detail::kPoolMagic);
  detail::write_raw(out, detail::kPoolFormatVersion);
  detail::write_raw(out, std::uint32_t{0});
  detail::write_raw(out, static_cast<std::uint32_t>(pool.points.cols()));
  detail::write_raw(out, static_cast<std::uint64_t>(pool.points.rows()));
  detail::write_raw(out, pool.seed);
  const auto& spec = pool.source_spec;
  detail::write_raw(out, static_cast<std::uint32_t>(spec.centers.rows()));
  detail::write_raw(out, spec.sigma);
  detail::write_doubles(out, spec.centers.data(),
                        spec.centers.rows() * spec.centers.cols());
  detail::write_raw(out, static_cast<std::uint32_t>(spec.mode_probs.empty() ? 0 : 1));
  if (!spec.mode_probs.empty())
    detail::write_doubles(out, spec.mode_probs.data(), spec.mode_probs.size());
  detail::write_doubles(out, pool.points.data(),
                        pool.points.rows() * pool.points.cols());
  if (!out) throw InvalidInput("save_pool: write failed for " + path.string());
}

inline SamplePool load_pool(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("load_pool: cannot open " + path.string());
  std::uint32_t magic, version, kind, d_dim, k;
  std::uint64_t n;
  detail::read_raw(in, magic);
  if (magic != detail::kPoolMagic)
    throw InvalidInput("load_pool: bad magic in " + path.string());
  detail::read_raw(in, version);
  if (version != detail::kPoolFormatVersion)
    throw InvalidInput("load_pool: unsupported version");
  detail::read_raw(in, kind);
  if (kind != 0) throw InvalidInput("load_pool: file holds a query set, not a pool");
  detail::read_raw(in, d_dim);
  detail::read_raw(in, n);
  SamplePool pool;
  detail::read_raw(in, pool.seed);
  detail::read_raw(in, k);
  detail::read_raw(in, pool.source_spec.sigma);
  pool.source_spec.centers.resize(k, d_dim);
  detail::read_doubles(in, pool.source_spec.centers.data(),
                       static_cast<std::size_t>(k) * d_dim);
  std::uint32_t probs_present;
  detail::read_raw(in, probs_present);
  if (probs_present) {
    pool.source_spec.mode_probs.resize(k);
    detail::read_doubles(in, pool.source_spec.mode_probs.data(), k);
  }
  pool.points.resize(n, d_dim);
  detail::read_doubles(in, pool.points.data(), static_cast<std::size_t>(n) * d_dim);
  return pool;
}

inline void save_queries(const QuerySet& qs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("save_queries: cannot open " + path.string());
  detail::write_raw(out, detail::kPoolMagic);
  detail::write_raw(out, detail::kPoolFormatVersion);
  detail::write_raw(out, std::uint32_t{1});
  detail::write_raw(out, static_cast<std::uint32_t>(qs.queries.cols()));
  detail::write_raw(out, static_cast<std::uint64_t>(qs.queries.rows()));
  detail::write_raw(out, qs.seed);
  detail::write_raw(out, static_cast<std::uint32_t>(qs.scheme));
  detail::write_raw(out, qs.scale);
  detail::write_doubles(out, qs.queries.data(),
                        qs.queries.rows() * qs.queries.cols());
  if (!out) throw InvalidInput("save_queries: write failed for " + path.string());
}

inline QuerySet load_queries(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("load_queries: cannot open " + path.string());
  std::uint32_t magic, version, kind, d_dim, scheme;
  std::uint64_t n;
  detail::read_raw(in, magic);
  if (magic != detail::kPoolMagic)
    throw InvalidInput("load_queries: bad magic in " + path.string());
  detail::read_raw(in, version);
  if (version != detail::kPoolFormatVersion)
    throw InvalidInput("load_queries: unsupported version");
  detail::read_raw(in, kind);
  if (kind != 1) throw InvalidInput("load_queries: file holds a pool, not queries");
  detail::read_raw(in, d_dim);
  detail::read_raw(in, n);
  QuerySet qs;
  detail::read_raw(in, qs.seed);
  detail::read_raw(in, scheme);
  qs.scheme = static_cast<QueryScheme>(scheme);
  detail::read_raw(in, qs.scale);
  qs.queries.resize(n, d_dim);
  detail::read_doubles(in, qs.queries.data(), static_cast<std::size_t>(n) * d_dim);
  return qs;
}

}  // namespace snisabc
