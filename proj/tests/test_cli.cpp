#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end checks of the command line binary: exit codes, file outputs,
// determinism. The binary path and a scratch directory come from the build.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(BATTKIT_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf;
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path work = fs::path(BATTKIT_WORK_DIR) / "cli_scratch";

struct Fixture {
  Fixture() {
    fs::remove_all(work);
    fs::create_directories(work);
    REQUIRE(run("export --out " + (work / "data").string()).exit_code == 0);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "export writes the complete default dataset") {
  for (const char* f :
       {"ocv_pos.csv", "ocv_neg.csv", "params.txt", "config.json"}) {
    CHECK(fs::exists(work / "data" / f));
  }
  CHECK(slurp(work / "data" / "ocv_pos.csv").find("zeta,voltage_V") !=
        std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "simulate: zero-current config gives flat traces") {
  // patch the profile to constant zero current
  std::string cfg = slurp(work / "data" / "config.json");
  const auto pos = cfg.find("\"profile\"");
  const auto open = cfg.find('{', pos);
  const auto close = cfg.find('}', open);
  cfg = cfg.substr(0, open) +
        R"({"kind": "constant", "amps": 0.0, "horizon": 400.0})" +
        cfg.substr(close + 1);
  cfg.replace(cfg.find("\"active_window_end\": 3600.0"),
              std::string("\"active_window_end\": 3600.0").size(),
              "\"active_window_end\": 300.0");
  std::ofstream(work / "data" / "config_rest.json") << cfg;

  const RunResult r = run("simulate --config " +
                          (work / "data" / "config_rest.json").string() +
                          " --out " + (work / "rest").string());
  CHECK(r.exit_code == 0);
  const std::string traces = slurp(work / "rest" / "simulate_traces.csv");
  // every voltage row identical to the first data row
  std::istringstream in(traces);
  std::string line;
  std::getline(in, line);  // provenance
  std::getline(in, line);  // header
  std::string first;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto second_comma = line.find(',', line.find(',') + 1);
    const std::string rest = line.substr(second_comma);
    if (first.empty()) first = rest;
    CHECK(rest == first);
    ++rows;
  }
  CHECK(rows > 100);
  const std::string metrics = slurp(work / "rest" / "simulate_metrics.json");
  CHECK(metrics.find("\"full\"") != std::string::npos);
  CHECK(metrics.find("\"active\"") != std::string::npos);
  CHECK(metrics.find("provenance") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "missing OCV file exits with code 2 and the path") {
  std::string cfg = slurp(work / "data" / "config.json");
  cfg.replace(cfg.find("ocv_pos.csv"), std::string("ocv_pos.csv").size(),
              "missing_ocv.csv");
  std::ofstream(work / "data" / "config_bad.json") << cfg;
  const RunResult r = run("simulate --config " +
                          (work / "data" / "config_bad.json").string() +
                          " --out " + (work / "bad").string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("missing_ocv.csv") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "design is reproducible byte for byte") {
  const std::string cfg = (work / "data" / "config.json").string();
  REQUIRE(run("design --config " + cfg + " --out " + (work / "d1").string())
              .exit_code == 0);
  REQUIRE(run("design --config " + cfg + " --out " + (work / "d2").string())
              .exit_code == 0);
  CHECK(slurp(work / "d1" / "design.json") == slurp(work / "d2" / "design.json"));
}

TEST_CASE_FIXTURE(Fixture, "broken OCV slope bounds make the design infeasible") {
  // mixed-sign huge slopes put zero inside the slope polytope: undetectable
  {
    std::ofstream out(work / "data" / "ocv_pos_broken.csv");
    out << "zeta,voltage_V\n0.0,0.0\n0.5,500000000.0\n1.0,0.0\n";
  }
  std::string cfg = slurp(work / "data" / "config.json");
  cfg.replace(cfg.find("ocv_pos.csv"), std::string("ocv_pos.csv").size(),
              "ocv_pos_broken.csv");
  std::ofstream(work / "data" / "config_broken.json") << cfg;
  const RunResult r = run("design --config " +
                          (work / "data" / "config_broken.json").string() +
                          " --out " + (work / "dbroken").string());
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("infeasible") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "estimate: sweep structure matches the config") {
  std::string cfg = slurp(work / "data" / "config.json");
  const auto pos = cfg.find("\"campaign\"");
  const auto open = cfg.find('{', pos);
  const auto close = cfg.find('}', open);
  cfg = cfg.substr(0, open) +
        R"({"initial_soc_estimates": [0, 50, 100], "gain_scales": [1.0, 0.1],
            "oracle_plant": false, "dt": 0.5, "sample_stride": 20})" +
        cfg.substr(close + 1);
  std::ofstream(work / "data" / "config_small.json") << cfg;
  const std::string cfgp = (work / "data" / "config_small.json").string();
  REQUIRE(run("design --config " + cfgp + " --out " + (work / "dd").string())
              .exit_code == 0);
  const RunResult r =
      run("estimate --config " + cfgp + " --design " +
          (work / "dd" / "design.json").string() + " --out " +
          (work / "est").string());
  CHECK(r.exit_code == 0);
  const std::string metrics = slurp(work / "est" / "estimate_metrics.json");
  // 3 SOC points x 2 gains x 3 estimators = 18 scenario rows
  std::size_t count = 0, at = 0;
  while ((at = metrics.find("\"estimator\"", at)) != std::string::npos) {
    ++count;
    ++at;
  }
  CHECK(count == 18);
  CHECK(metrics.find("improvement_percent") != std::string::npos);
  // per-run traces exist
  std::size_t n_traces = 0;
  for (const auto& e : fs::directory_iterator(work / "est" / "traces")) {
    (void)e;
    ++n_traces;
  }
  CHECK(n_traces == 18);
}

TEST_CASE_FIXTURE(Fixture, "ingest validates schema and applies the gain") {
  {
    std::ofstream out(work / "current.csv");
    out << "time_s,current_A\n0,2.0\n10,2.0\n20,0.0\n";
  }
  const RunResult ok =
      run("ingest --current " + (work / "current.csv").string() +
          " --current-gain 1.035 --out " + (work / "ing").string());
  CHECK(ok.exit_code == 0);
  const std::string summary = slurp(work / "ing" / "ingest_summary.json");
  // integral of 2 A over 20 s, rescaled by 1.035
  CHECK(summary.find("41.4") != std::string::npos);
  CHECK(fs::exists(work / "ing" / "coulomb_soc.csv"));

  {
    std::ofstream out(work / "current_bad.csv");
    out << "time_s,current_A\n0,2.0\n10,2.0\n5,0.0\n";
  }
  const RunResult bad = run("ingest --current " +
                            (work / "current_bad.csv").string() + " --out " +
                            (work / "ingbad").string());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find(":4") != std::string::npos);  // offending row cited

  const RunResult noheader = run("ingest --current " +
                                 (work / "data" / "params.txt").string() +
                                 " --out " + (work / "ingbad2").string());
  CHECK(noheader.exit_code == 2);
}
