#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "snisabc/errors.hpp"
#include "snisabc/harness.hpp"

namespace snisabc {

// Shortest round-trip decimal form; identical doubles always print the same
// bytes, which is what makes report files byte-comparable across runs.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace detail {

// Report CSVs follow RFC 4180: header row, CRLF line endings. None of the
// emitted fields need quoting.
inline constexpr const char* kCsvEol = "\r\n";

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError("cannot open output file " + path.string());
  return out;
}

}  // namespace detail

inline constexpr const char* kScalingCsvHeader =
    "n,method,bias_corrected,bias_naive,total_variance,mean_time_us,"
    "clamped_count,retries";

inline void write_scaling_csv(const ScalingReport& rep, std::ostream& out) {
  out << kScalingCsvHeader << detail::kCsvEol;
  for (const ReportRow& row : rep.rows) {
    out << row.n << ',' << to_string(row.method) << ','
        << format_double(row.bias_corrected) << ','
        << format_double(row.bias_naive) << ','
        << format_double(row.total_variance) << ','
        << format_double(row.mean_time_us) << ',' << row.clamped_count << ','
        << row.retries << detail::kCsvEol;
  }
}

inline void write_per_query_csv(const ScalingReport& rep, std::ostream& out) {
  out << "n,method,query_index,bias_corrected,bias_naive,trace_cov,"
         "se_bias_corrected,clamped,retries"
      << detail::kCsvEol;
  for (const PerQueryRow& row : rep.per_query) {
    out << row.n << ',' << to_string(row.method) << ',' << row.query_index << ','
        << format_double(row.bias_corrected) << ','
        << format_double(row.bias_naive) << ',' << format_double(row.trace_cov)
        << ',' << format_double(row.se_bias_corrected) << ','
        << (row.clamped ? 1 : 0) << ',' << row.retries << detail::kCsvEol;
  }
}

inline void write_baselines_csv(const ScalingReport& rep, std::ostream& out) {
  out << "n,method,bias,variance,time_us" << detail::kCsvEol;
  for (const ReportRow& row : rep.rows) {
    out << row.n << ',' << to_string(row.method) << ','
        << format_double(row.bias_naive) << ','
        << format_double(row.total_variance) << ','
        << format_double(row.mean_time_us) << detail::kCsvEol;
  }
}

// Two columns per line, log10(n) and log10(b-hat), grouped into one block
// per method for gnuplot-style plotting. Rows with a zero b-hat cannot be
// placed on a log axis and are emitted as comments.
inline void write_loglog_dat(const ScalingReport& rep, std::ostream& out) {
  bool first = true;
  for (Method m : rep.config.methods) {
    if (!first) out << "\n\n";
    first = false;
    out << "# method: " << to_string(m) << "\n";
    out << "# log10_n log10_bias_corrected\n";
    for (const ReportRow& row : rep.rows) {
      if (row.method != m) continue;
      if (row.bias_corrected > 0.0) {
        out << format_double(std::log10(static_cast<double>(row.n))) << ' '
            << format_double(std::log10(row.bias_corrected)) << "\n";
      } else {
        out << "# n " << row.n << ": bias_corrected clamped to zero\n";
      }
    }
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json centers = nlohmann::json::array();
  for (std::size_t i = 0; i < cfg.pool_spec.centers.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : cfg.pool_spec.centers.row(i)) row.push_back(v);
    centers.push_back(row);
  }
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  return {
      {"kernel", {{"tau", cfg.kernel.tau}}},
      {"distributions",
       {{"pool_centers", centers},
        {"pool_sigma", cfg.pool_spec.sigma},
        {"pool_mode_probs", cfg.pool_spec.mode_probs},
        {"pool_size", cfg.pool_size},
        {"pool_seed", cfg.pool_seed},
        {"query_scheme", to_string(cfg.query_scheme)},
        {"query_scale", cfg.query_scale},
        {"query_count", cfg.query_count},
        {"query_seed", cfg.query_seed}}},
      {"estimators",
       {{"bootstrap_replicates", cfg.bootstrap.replicates},
        {"brsnis_iterations", cfg.brsnis.iterations},
        {"brsnis_burn_in", cfg.brsnis.burn_in}}},
      {"harness",
       {{"n_grid", cfg.n_grid},
        {"trials", cfg.trials},
        {"methods", methods},
        {"replacement", cfg.replacement},
        {"master_seed", cfg.master_seed},
        {"warmup_skip", cfg.warmup_skip},
        {"slope_fit_min_n", cfg.slope_fit_min_n},
        {"measure_time", cfg.measure_time},
        {"retry_cap", cfg.retry_cap}}},
  };
}

inline nlohmann::json report_to_json(const ScalingReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& r : rep.rows) {
    rows.push_back({{"n", r.n},
                    {"method", to_string(r.method)},
                    {"bias_corrected", r.bias_corrected},
                    {"bias_naive", r.bias_naive},
                    {"total_variance", r.total_variance},
                    {"mean_time_us", r.mean_time_us},
                    {"se_bias_corrected", r.se_bias_corrected},
                    {"clamped_count", r.clamped_count},
                    {"retries", r.retries},
                    {"extra_samples_per_estimate", r.extra_samples_per_estimate}});
  }
  nlohmann::json slopes = nlohmann::json::array();
  for (const MethodSlope& s : rep.slopes) {
    nlohmann::json entry = {{"method", to_string(s.method)}, {"valid", s.valid}};
    if (s.valid) {
      entry["slope"] = s.fit.slope;
      entry["intercept_log"] = s.fit.intercept;
      entry["stderr"] = s.fit.stderr_slope;
      entry["points"] = s.fit.points;
    }
    entry["used_n"] = s.used_n;
    entry["excluded_n"] = s.excluded_n;
    slopes.push_back(entry);
  }
  return {{"config", config_to_json(rep.config)},
          {"seeds",
           {{"pool_seed", rep.config.pool_seed},
            {"query_seed", rep.config.query_seed},
            {"master_seed", rep.config.master_seed}}},
          {"rows", rows},
          {"slopes", slopes}};
}

namespace detail {

template <typename WriteFn>
void to_file(const std::filesystem::path& path, WriteFn&& fn) {
  std::ofstream out = open_out(path);
  fn(out);
  if (!out) throw ExperimentError("write failed for " + path.string());
}

}  // namespace detail

inline void write_scaling_csv(const ScalingReport& rep,
                              const std::filesystem::path& path) {
  detail::to_file(path, [&](std::ostream& o) { write_scaling_csv(rep, o); });
}

inline void write_per_query_csv(const ScalingReport& rep,
                                const std::filesystem::path& path) {
  detail::to_file(path, [&](std::ostream& o) { write_per_query_csv(rep, o); });
}

inline void write_baselines_csv(const ScalingReport& rep,
                                const std::filesystem::path& path) {
  detail::to_file(path, [&](std::ostream& o) { write_baselines_csv(rep, o); });
}

inline void write_loglog_dat(const ScalingReport& rep,
                             const std::filesystem::path& path) {
  detail::to_file(path, [&](std::ostream& o) { write_loglog_dat(rep, o); });
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  detail::to_file(path, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
}

}  // namespace snisabc
