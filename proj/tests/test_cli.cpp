#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path capture =
      fs::temp_directory_path() / ("snisabc_cli_out_" + std::to_string(counter++));
  const std::string cmd =
      std::string(SNIS_ABC_BIN) + " " + args + " > " + capture.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult r;
#if defined(__unix__) || defined(__APPLE__)
  if (raw != -1 && WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
#else
  r.code = raw;
#endif
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  fs::remove(capture);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("snisabc_cli_" + tag);
  fs::remove_all(p);
  return p;
}

fs::path write_tiny_config(const std::string& tag, const std::string& extra = "") {
  const fs::path dir = fresh_dir(tag + "_cfg");
  fs::create_directories(dir);
  const fs::path file = dir / "exp.toml";
  std::ofstream out(file);
  out << R"([kernel]
tau = 0.1

[distributions]
pool_size = 1500
query_count = 2

[harness]
n_grid = [8, 16, 32]
trials = 40
methods = ["standard", "abc"]
measure_time = false
)" << extra;
  return file;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t crlf_lines(const std::string& text) {
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = text.find("\r\n", pos)) != std::string::npos;
       pos += 2)
    ++lines;
  return lines;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("scaling").code == 2);            // missing --config
  CHECK(run_cli("frobnicate").code == 2);         // unknown subcommand
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("scaling --help").code == 0);
}

TEST_CASE("config errors exit with 2 and write nothing") {
  const fs::path out = fresh_dir("cfgerr_out");

  const CliResult missing =
      run_cli("scaling --config /nonexistent/exp.toml --out " + out.string());
  CHECK(missing.code == 2);
  CHECK(!fs::exists(out));

  const fs::path bad = write_tiny_config("badkey", "retry_cp = 3\n");
  const CliResult unknown =
      run_cli("scaling --config " + bad.string() + " --out " + out.string());
  CHECK(unknown.code == 2);
  CHECK(unknown.output.find("retry_cp") != std::string::npos);
  CHECK(!fs::exists(out));
}

TEST_CASE("scaling writes the full report set") {
  const fs::path cfg = write_tiny_config("scaling");
  const fs::path out = fresh_dir("scaling_out");
  const CliResult r =
      run_cli("scaling --config " + cfg.string() + " --out " + out.string());
  INFO(r.output);
  REQUIRE(r.code == 0);

  const std::string csv = slurp(out / "scaling.csv");
  CHECK(csv.find("n,method,bias_corrected,bias_naive,total_variance,"
                 "mean_time_us,clamped_count,retries\r\n") == 0);
  CHECK(crlf_lines(csv) == 1 + 3 * 2);  // header + |n_grid| x |methods|

  const std::string pq = slurp(out / "scaling_per_query.csv");
  CHECK(crlf_lines(pq) == 1 + 3 * 2 * 2);  // x queries

  CHECK(fs::exists(out / "scaling_loglog.dat"));

  nlohmann::json j;
  std::ifstream(out / "scaling.json") >> j;
  CHECK(j["seeds"]["master_seed"] == 3);
  CHECK(j["rows"].size() == 6);
  CHECK(j["slopes"].size() == 2);

  // timing was disabled, so the output is a pure function of the config
  const fs::path out2 = fresh_dir("scaling_out2");
  const CliResult r2 =
      run_cli("scaling --config " + cfg.string() + " --out " + out2.string());
  REQUIRE(r2.code == 0);
  CHECK(slurp(out2 / "scaling.csv") == csv);
  CHECK(slurp(out2 / "scaling.json") == slurp(out / "scaling.json"));

  fs::remove_all(out);
  fs::remove_all(out2);
}

TEST_CASE("worker count leaves the outputs untouched") {
  const fs::path cfg = write_tiny_config("workers");
  const fs::path out1 = fresh_dir("workers_out1");
  const fs::path out2 = fresh_dir("workers_out2");
  REQUIRE(run_cli("scaling --config " + cfg.string() + " --out " + out1.string() +
                  " --workers 1")
              .code == 0);
  REQUIRE(run_cli("scaling --config " + cfg.string() + " --out " + out2.string() +
                  " --workers 3")
              .code == 0);
  CHECK(slurp(out1 / "scaling.csv") == slurp(out2 / "scaling.csv"));
  CHECK(slurp(out1 / "scaling.json") == slurp(out2 / "scaling.json"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("overrides and seed flags reach the run") {
  const fs::path cfg = write_tiny_config("overrides");
  const fs::path out = fresh_dir("overrides_out");

  const CliResult r = run_cli("scaling --config " + cfg.string() + " --out " +
                              out.string() +
                              " --seed 777 --overrides harness.trials=1 "
                              "distributions.query_count=1");
  INFO(r.output);
  REQUIRE(r.code == 0);

  nlohmann::json j;
  std::ifstream(out / "scaling.json") >> j;
  CHECK(j["seeds"]["master_seed"] == 777);
  CHECK(j["config"]["harness"]["trials"] == 1);
  CHECK(j["config"]["distributions"]["query_count"] == 1);
  fs::remove_all(out);
}

TEST_CASE("baselines writes its comparison table") {
  const fs::path cfg = write_tiny_config(
      "baselines",
      "\n[estimators]\nbootstrap_replicates = 25\nbrsnis_iterations = 5\n");
  const fs::path out = fresh_dir("baselines_out");
  const CliResult r = run_cli(
      "baselines --config " + cfg.string() + " --out " + out.string() +
      " --overrides 'harness.methods=[\"standard\", \"abc\", \"jackknife\", "
      "\"bootstrap\", \"brsnis\"]' 'harness.n_grid=[4, 8]' harness.trials=20");
  INFO(r.output);
  REQUIRE(r.code == 0);

  const std::string csv = slurp(out / "baselines.csv");
  CHECK(csv.find("n,method,bias,variance,time_us\r\n") == 0);
  CHECK(crlf_lines(csv) == 1 + 2 * 5);

  nlohmann::json j;
  std::ifstream(out / "baselines.json") >> j;
  bool saw_overhead = false;
  for (const auto& row : j["rows"])
    if (row["method"] == "brsnis" && row["n"] == 8) {
      CHECK(row["extra_samples_per_estimate"] == 5 * 7 + 1 - 8);
      saw_overhead = true;
    }
  CHECK(saw_overhead);
  CHECK(r.output.find("bias:") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("validate subcommand reports per-property lines") {
  const CliResult good = run_cli("validate --properties convex-hull,shift-invariance");
  INFO(good.output);
  CHECK(good.code == 0);
  CHECK(good.output.find("[PASS] convex-hull") != std::string::npos);
  CHECK(good.output.find("[PASS] shift-invariance") != std::string::npos);

  const CliResult broken =
      run_cli("validate --break-abc --properties convex-hull");
  CHECK(broken.code == 1);
  CHECK(broken.output.find("[FAIL] convex-hull") != std::string::npos);

  CHECK(run_cli("validate --properties no-such-check").code == 2);
}

TEST_CASE("demo writes a plottable scene and a summary") {
  const fs::path out = fresh_dir("demo_out");
  const CliResult r = run_cli("demo --out " + out.string());
  INFO(r.output);
  REQUIRE(r.code == 0);

  const std::string csv = slurp(out / "demo_points.csv");
  CHECK(csv.find("label,x,y\r\n") == 0);
  CHECK(crlf_lines(csv) == 185);  // header + 180 pool rows + 4 markers
  CHECK(csv.find("query,") != std::string::npos);
  CHECK(csv.find("target,") != std::string::npos);
  CHECK(csv.find("standard,") != std::string::npos);
  CHECK(csv.find("abc,") != std::string::npos);
  CHECK(csv.find("batch,") != std::string::npos);

  CHECK(r.output.find("mean err standard") != std::string::npos);
  fs::remove_all(out);
}
