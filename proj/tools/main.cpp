// Command line front end: scaling studies, baseline comparisons, property
// validation and a small plottable demo. Exit codes: 0 success, 1 a run or
// property check failed, 2 usage or configuration error (nothing written).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snisabc/config.hpp"
#include "snisabc/demo.hpp"
#include "snisabc/harness.hpp"
#include "snisabc/report_io.hpp"
#include "snisabc/thread_pool.hpp"
#include "snisabc/validation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace snisabc;

std::size_t resolve_workers(std::optional<std::size_t> cli_value) {
  if (cli_value && *cli_value > 0) return *cli_value;
  if (const char* env = std::getenv("SNIS_ABC_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 0;  // library default (hardware concurrency)
}

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* sub, RunOptions& opt) {
  sub->add_option("--config", opt.config_path, "experiment config (TOML)")
      ->required();
  sub->add_option("--out", opt.out_dir, "output directory")
      ->capture_default_str();
  sub->add_option("--seed", opt.seed, "override harness.master_seed");
  sub->add_option("--workers", opt.workers,
                  "worker threads (default: SNIS_ABC_WORKERS or hardware)");
  sub->add_option("--overrides", opt.overrides,
                  "config overrides, section.key=value");
}

// Config problems must surface before any output path is touched.
ExperimentConfig load_or_exit2(const RunOptions& opt) {
  ExperimentConfig cfg = load_config(opt.config_path, opt.overrides);
  if (opt.seed) cfg.master_seed = *opt.seed;
  return cfg;
}

void print_report_header(const ExperimentConfig& cfg, std::size_t workers) {
  std::cout << "pool " << cfg.pool_size << " points, " << cfg.query_count
            << " queries (" << to_string(cfg.query_scheme) << "), tau "
            << format_double(cfg.kernel.tau) << ", trials " << cfg.trials
            << ", workers " << (workers ? workers : default_worker_count())
            << "\n";
}

int cmd_scaling(const RunOptions& opt) {
  const ExperimentConfig cfg = load_or_exit2(opt);
  const std::size_t workers = resolve_workers(opt.workers);
  print_report_header(cfg, workers);

  const ScalingReport rep = run_scaling_experiment(cfg, workers);

  fs::create_directories(opt.out_dir);
  const fs::path out(opt.out_dir);
  write_scaling_csv(rep, out / "scaling.csv");
  write_per_query_csv(rep, out / "scaling_per_query.csv");
  write_loglog_dat(rep, out / "scaling_loglog.dat");
  write_json(report_to_json(rep), out / "scaling.json");

  for (const MethodSlope& s : rep.slopes) {
    std::cout << "slope " << to_string(s.method) << ": ";
    if (s.valid) {
      std::cout << format_double(s.fit.slope) << " +/- "
                << format_double(s.fit.stderr_slope) << " (" << s.fit.points
                << " points";
      if (!s.excluded_n.empty()) {
        std::cout << ", excluded n";
        for (std::size_t n : s.excluded_n) std::cout << " " << n;
      }
      std::cout << ")\n";
    } else {
      std::cout << "not enough usable points (" << s.used_n.size() << ")\n";
    }
  }
  std::cout << "wrote " << (out / "scaling.csv").string() << ", "
            << (out / "scaling_per_query.csv").string() << ", "
            << (out / "scaling_loglog.dat").string() << ", "
            << (out / "scaling.json").string() << "\n";
  return 0;
}

int cmd_baselines(const RunOptions& opt) {
  const ExperimentConfig cfg = load_or_exit2(opt);
  const std::size_t workers = resolve_workers(opt.workers);
  print_report_header(cfg, workers);

  const ScalingReport rep = run_baseline_comparison(cfg, workers);

  fs::create_directories(opt.out_dir);
  const fs::path out(opt.out_dir);
  write_baselines_csv(rep, out / "baselines.csv");
  write_json(report_to_json(rep), out / "baselines.json");

  for (std::size_t n : cfg.n_grid) {
    std::vector<const ReportRow*> rows;
    for (const ReportRow& r : rep.rows)
      if (r.n == n) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const ReportRow* a, const ReportRow* b) {
      return a->bias_naive < b->bias_naive;
    });
    std::cout << "n=" << n << " bias: ";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) std::cout << " < ";
      std::cout << to_string(rows[i]->method) << " ("
                << format_double(rows[i]->bias_naive) << ")";
    }
    std::cout << "\n";
  }
  for (const ReportRow& r : rep.rows) {
    if (r.method == Method::brsnis && r.n == cfg.n_grid.front()) {
      std::cout << "brsnis extra samples per estimate at n=" << r.n << ": "
                << r.extra_samples_per_estimate << "\n";
    }
  }
  std::cout << "wrote " << (out / "baselines.csv").string() << ", "
            << (out / "baselines.json").string() << "\n";
  return 0;
}

int cmd_validate(std::optional<std::uint64_t> seed, bool break_abc,
                 const std::vector<std::string>& properties) {
  PropertySuiteOptions opt;
  if (seed) opt.seed = *seed;
  opt.break_abc = break_abc;
  opt.only = properties;
  for (const std::string& name : properties) {
    const auto& known = property_names();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      std::cerr << "unknown property '" << name << "'; known:";
      for (const std::string& k : known) std::cerr << " " << k;
      std::cerr << "\n";
      return 2;
    }
  }

  const std::vector<PropertyResult> results = run_property_suite(opt);
  bool all_pass = true;
  for (const PropertyResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) std::cout << ": " << r.detail;
    std::cout << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_demo(const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const DemoArtifacts art = make_demo_artifacts();
  fs::create_directories(out_dir);
  const fs::path csv = fs::path(out_dir) / "demo_points.csv";
  write_demo_csv(art, csv);

  const DemoMcSummary mc =
      run_demo_mc(art.fixture, 10000, seed.value_or(kDemoSeed));
  const auto err = [](const Vec& a, const Vec& b) {
    return l2_distance(std::span<const double>(a), std::span<const double>(b));
  };
  std::cout << "wrote " << csv.string() << "\n"
            << "target (" << format_double(art.target[0]) << ", "
            << format_double(art.target[1]) << ")\n"
            << "displayed batch: standard err "
            << format_double(err(art.standard_value, art.target))
            << ", corrected err " << format_double(err(art.abc_value, art.target))
            << "\n"
            << "monte carlo over " << mc.trials
            << " batches of " << kDemoBatchSize << ": mean err standard "
            << format_double(mc.mean_standard_err) << ", corrected "
            << format_double(mc.mean_abc_err) << ", corrected closer in "
            << format_double(100.0 * mc.abc_win_rate) << "% of draws\n";
  return mc.mean_abc_err < mc.mean_standard_err ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softmax-weighted centroid estimators: scaling studies, "
               "baselines, property validation, demo"};
  app.require_subcommand(1);

  RunOptions scaling_opt;
  CLI::App* scaling = app.add_subcommand(
      "scaling", "bias scaling study with log-log slope fits");
  add_run_options(scaling, scaling_opt);

  RunOptions baselines_opt;
  CLI::App* baselines = app.add_subcommand(
      "baselines", "side by side estimator comparison");
  add_run_options(baselines, baselines_opt);

  std::optional<std::uint64_t> validate_seed;
  bool break_abc = false;
  std::vector<std::string> properties;
  CLI::App* validate = app.add_subcommand(
      "validate", "run property checks against closed-form oracles");
  validate->add_option("--seed", validate_seed, "property suite seed");
  validate->add_flag("--break-abc", break_abc,
                     "inject a sign-flipped correction (the suite must fail)");
  validate->add_option("--properties", properties,
                       "comma separated subset of checks")
      ->delimiter(',');

  std::string demo_out = "out";
  std::optional<std::uint64_t> demo_seed;
  CLI::App* demo =
      app.add_subcommand("demo", "two-dimensional worked example");
  demo->add_option("--out", demo_out, "output directory")->capture_default_str();
  demo->add_option("--seed", demo_seed, "monte carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(scaling)) return cmd_scaling(scaling_opt);
    if (app.got_subcommand(baselines)) return cmd_baselines(baselines_opt);
    if (app.got_subcommand(validate))
      return cmd_validate(validate_seed, break_abc, properties);
    if (app.got_subcommand(demo)) return cmd_demo(demo_out, demo_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
