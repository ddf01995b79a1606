#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "snisabc/errors.hpp"
#include "snisabc/harness.hpp"

namespace snisabc {

// Config files use a TOML subset: [section] headers, key = value pairs,
// # comments, and single-line values that are booleans, integers, floats,
// quoted strings, or (nested) arrays of those. That covers the whole
// ExperimentConfig tree; anything fancier is rejected with a line number.
struct TomlValue {
  std::variant<std::int64_t, double, bool, std::string, std::vector<TomlValue>> v;

  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(v); }
};

using TomlTable = std::map<std::string, TomlValue>;  // keys are "section.key"

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline TomlValue parse_toml_value(std::string_view text, const std::string& where);

inline std::vector<TomlValue> parse_toml_array(std::string_view text,
                                               const std::string& where) {
  // text excludes the surrounding brackets
  std::vector<TomlValue> out;
  std::size_t depth = 0;
  std::size_t start = 0;
  bool in_string = false;
  char quote = '"';
  auto flush = [&](std::size_t end) {
    const std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.push_back(parse_toml_value(piece, where));
    start = end + 1;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == quote) in_string = false;
      continue;
    }
    if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (depth == 0) throw ConfigError(where + ": unbalanced ']' in array");
      --depth;
    } else if (c == ',' && depth == 0) {
      flush(i);
    }
  }
  if (depth != 0 || in_string)
    throw ConfigError(where + ": unterminated array or string");
  const std::string_view tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(parse_toml_value(tail, where));
  return out;
}

inline TomlValue parse_toml_value(std::string_view text, const std::string& where) {
  text = trim(text);
  if (text.empty()) throw ConfigError(where + ": empty value");
  if (text == "true") return {true};
  if (text == "false") return {false};
  if (text.front() == '"' || text.front() == '\'') {
    if (text.size() < 2 || text.back() != text.front())
      throw ConfigError(where + ": unterminated string");
    return {std::string(text.substr(1, text.size() - 2))};
  }
  if (text.front() == '[') {
    if (text.back() != ']') throw ConfigError(where + ": unterminated array");
    return {parse_toml_array(text.substr(1, text.size() - 2), where)};
  }
  const bool looks_float = text.find_first_of(".eE") != std::string_view::npos &&
                           !(text.size() > 1 && text[0] == '0' && text[1] == 'x');
  if (!looks_float) {
    std::int64_t iv = 0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), iv);
    if (ec == std::errc() && ptr == text.data() + text.size()) return {iv};
  }
  double dv = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), dv);
  if (ec == std::errc() && ptr == text.data() + text.size()) return {dv};
  throw ConfigError(where + ": cannot parse value '" + std::string(text) + "'");
}

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  char quote = '"';
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == quote) in_string = false;
    } else if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace detail

inline TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = "config line " + std::to_string(line_no);
    const std::string stripped = detail::strip_comment(raw);
    const std::string_view line = detail::trim(stripped);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(where + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(where + ": expected key = value");
    const std::string_view key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string full_key =
        section.empty() ? std::string(key) : section + "." + std::string(key);
    if (table.contains(full_key))
      throw ConfigError(where + ": duplicate key " + full_key);
    table[full_key] = detail::parse_toml_value(line.substr(eq + 1), where);
  }
  return table;
}

inline TomlTable parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

// "section.key=value" assignments from the command line. Overrides may only
// touch keys the config tree already knows about.
inline void apply_override(TomlTable& table, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key(detail::trim(std::string_view(assignment).substr(0, eq)));
  if (!table.contains(key))
    throw ConfigError("override references unknown config key '" + key + "'");
  table[key] = detail::parse_toml_value(
      std::string_view(assignment).substr(eq + 1), "override " + key);
}

namespace detail {

// Tracks which keys the binding consumed so typos in the file surface as
// unknown-key errors rather than silently applied defaults.
class ConfigReader {
 public:
  explicit ConfigReader(const TomlTable& table) : table_(table) {}

  bool has(const std::string& key) {
    if (table_.contains(key)) {
      seen_.insert(key);
      return true;
    }
    return false;
  }

  const TomlValue& raw(const std::string& key) { return table_.at(key); }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const TomlValue& v = raw(key);
    if (!v.is_int()) throw ConfigError(key + ": expected an integer");
    return std::get<std::int64_t>(v.v);
  }

  std::size_t get_size(const std::string& key, std::int64_t fallback) {
    const std::int64_t v = get_int(key, fallback);
    if (v < 0) throw ConfigError(key + ": must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const TomlValue& v = raw(key);
    if (!v.is_int()) throw ConfigError(key + ": expected an integer");
    const std::int64_t i = std::get<std::int64_t>(v.v);
    if (i < 0) throw ConfigError(key + ": must be >= 0");
    return static_cast<std::uint64_t>(i);
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const TomlValue& v = raw(key);
    if (v.is_int()) return static_cast<double>(std::get<std::int64_t>(v.v));
    if (!v.is_float()) throw ConfigError(key + ": expected a number");
    return std::get<double>(v.v);
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const TomlValue& v = raw(key);
    if (!v.is_bool()) throw ConfigError(key + ": expected true or false");
    return std::get<bool>(v.v);
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const TomlValue& v = raw(key);
    if (!v.is_string()) throw ConfigError(key + ": expected a string");
    return std::get<std::string>(v.v);
  }

  void require(const std::string& key) {
    if (!table_.contains(key))
      throw ConfigError("config is missing required key '" + key + "'");
  }

  std::vector<std::size_t> get_size_vec(const std::string& key) {
    require(key);
    has(key);
    const TomlValue& v = raw(key);
    if (!v.is_array()) throw ConfigError(key + ": expected an array");
    std::vector<std::size_t> out;
    for (const TomlValue& e : std::get<std::vector<TomlValue>>(v.v)) {
      if (!e.is_int() || std::get<std::int64_t>(e.v) < 0)
        throw ConfigError(key + ": expected non-negative integers");
      out.push_back(static_cast<std::size_t>(std::get<std::int64_t>(e.v)));
    }
    return out;
  }

  Vec get_double_vec(const std::string& key) {
    has(key);
    const TomlValue& v = raw(key);
    if (!v.is_array()) throw ConfigError(key + ": expected an array");
    Vec out;
    for (const TomlValue& e : std::get<std::vector<TomlValue>>(v.v)) {
      if (e.is_int())
        out.push_back(static_cast<double>(std::get<std::int64_t>(e.v)));
      else if (e.is_float())
        out.push_back(std::get<double>(e.v));
      else
        throw ConfigError(key + ": expected numbers");
    }
    return out;
  }

  Matrix get_matrix(const std::string& key) {
    has(key);
    const TomlValue& v = raw(key);
    if (!v.is_array()) throw ConfigError(key + ": expected an array of arrays");
    const auto& rows = std::get<std::vector<TomlValue>>(v.v);
    if (rows.empty()) throw ConfigError(key + ": expected at least one row");
    Matrix m;
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array())
        throw ConfigError(key + ": expected an array of arrays");
      const auto& entries = std::get<std::vector<TomlValue>>(rows[i].v);
      if (i == 0) {
        cols = entries.size();
        if (cols == 0) throw ConfigError(key + ": rows must be non-empty");
        m.resize(rows.size(), cols);
      } else if (entries.size() != cols) {
        throw ConfigError(key + ": rows have inconsistent lengths");
      }
      for (std::size_t j = 0; j < cols; ++j) {
        const TomlValue& e = entries[j];
        if (e.is_int())
          m(i, j) = static_cast<double>(std::get<std::int64_t>(e.v));
        else if (e.is_float())
          m(i, j) = std::get<double>(e.v);
        else
          throw ConfigError(key + ": expected numbers");
      }
    }
    return m;
  }

  std::vector<std::string> get_string_vec(const std::string& key) {
    require(key);
    has(key);
    const TomlValue& v = raw(key);
    if (!v.is_array()) throw ConfigError(key + ": expected an array");
    std::vector<std::string> out;
    for (const TomlValue& e : std::get<std::vector<TomlValue>>(v.v)) {
      if (!e.is_string()) throw ConfigError(key + ": expected strings");
      out.push_back(std::get<std::string>(e.v));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : table_)
      if (!seen_.contains(key))
        throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  const TomlTable& table_;
  std::set<std::string> seen_;
};

}  // namespace detail

// Binds the parsed key-value tree to an ExperimentConfig. Unknown keys and
// type mismatches are errors; omitted optional keys take the documented
// defaults. Validation of cross-field invariants happens in validate().
inline ExperimentConfig config_from_table(const TomlTable& table) {
  detail::ConfigReader r(table);
  ExperimentConfig cfg;

  r.require("kernel.tau");
  cfg.kernel.tau = r.get_double("kernel.tau", 0.1);

  if (r.has("distributions.pool_centers"))
    cfg.pool_spec.centers = r.get_matrix("distributions.pool_centers");
  else
    cfg.pool_spec.centers = four_mode_toy().centers;
  cfg.pool_spec.sigma = r.get_double("distributions.pool_sigma", 0.1);
  if (r.has("distributions.pool_mode_probs"))
    cfg.pool_spec.mode_probs = r.get_double_vec("distributions.pool_mode_probs");
  r.require("distributions.pool_size");
  cfg.pool_size = r.get_size("distributions.pool_size", 0);
  cfg.pool_seed = r.get_u64("distributions.pool_seed", 1);

  const std::string scheme = r.get_string("distributions.query_scheme", "from-p");
  if (scheme == "from-p")
    cfg.query_scheme = QueryScheme::from_p;
  else if (scheme == "isotropic-gaussian")
    cfg.query_scheme = QueryScheme::isotropic_gaussian;
  else
    throw ConfigError("distributions.query_scheme: unknown scheme '" + scheme +
                      "' (expected from-p or isotropic-gaussian)");
  cfg.query_scale = r.get_double("distributions.query_scale", 0.5);
  r.require("distributions.query_count");
  cfg.query_count = r.get_size("distributions.query_count", 0);
  cfg.query_seed = r.get_u64("distributions.query_seed", 2);

  cfg.n_grid = r.get_size_vec("harness.n_grid");
  r.require("harness.trials");
  cfg.trials = r.get_size("harness.trials", 0);
  cfg.methods.clear();
  for (const std::string& name : r.get_string_vec("harness.methods")) {
    const auto m = method_from_string(name);
    if (!m) throw ConfigError("harness.methods: unknown method '" + name + "'");
    cfg.methods.push_back(*m);
  }
  cfg.replacement = r.get_bool("harness.replacement", true);
  cfg.master_seed = r.get_u64("harness.master_seed", 3);
  cfg.warmup_skip = r.get_size("harness.warmup_skip", 10);
  cfg.slope_fit_min_n = r.get_size("harness.slope_fit_min_n", 16);
  cfg.measure_time = r.get_bool("harness.measure_time", true);
  cfg.retry_cap = r.get_size("harness.retry_cap", 100);

  cfg.bootstrap.replicates =
      r.get_size("estimators.bootstrap_replicates", 100);
  cfg.brsnis.iterations = r.get_size("estimators.brsnis_iterations", 10);
  cfg.brsnis.burn_in = r.get_size("estimators.brsnis_burn_in", 1);

  r.reject_unknown();
  try {
    validate(cfg);
  } catch (const InvalidInput& err) {
    throw ConfigError(err.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {}) {
  TomlTable table = parse_toml_file(path);
  for (const std::string& o : overrides) apply_override(table, o);
  return config_from_table(table);
}

}  // namespace snisabc
