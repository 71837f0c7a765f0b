#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#ifndef ANCHORBOX_CLI_PATH
#error "ANCHORBOX_CLI_PATH must point at the CLI binary"
#endif
#ifndef ORACLE_CHILD_PATH
#error "ORACLE_CHILD_PATH must point at the oracle_child helper binary"
#endif

namespace {

using nlohmann::json;

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_command(const std::string& cmd) {
  CommandResult result;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string cli() { return ANCHORBOX_CLI_PATH; }

struct TempDir {
  std::string path;
  TempDir() {
    static int counter = 0;
    path = "/tmp/anchorbox_cli_" + std::to_string(getpid()) + "_" +
           std::to_string(counter++);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

// Small binary-labeled dataset with signal in x0.
std::string toy_dataset_csv() {
  std::string csv = "x0,x1,y\n";
  unsigned state = 12345;
  auto rnd = [&state]() {
    state = state * 1664525u + 1013904223u;
    return (state >> 8) / 16777216.0;
  };
  for (int i = 0; i < 80; ++i) {
    const double x0 = rnd() * 4.0 - 2.0;
    const double x1 = rnd() * 4.0 - 2.0;
    csv += std::to_string(x0) + "," + std::to_string(x1) + "," +
           (x0 > 0 ? "1" : "0") + "\n";
  }
  return csv;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_command(cli() + " --help").exit_code == 0);
  CHECK(run_command(cli()).exit_code == 1);  // subcommand required
  CHECK(run_command(cli() + " explain").exit_code == 1);  // --data required

  const TempDir dir;
  write_file(dir.path + "/d.csv", toy_dataset_csv());
  const CommandResult bad_rho = run_command(
      cli() + " explain --data " + dir.path + "/d.csv --label y --rho 1.5");
  CHECK(bad_rho.exit_code == 1);
  CHECK(bad_rho.output.find("rho") != std::string::npos);

  const CommandResult bad_label = run_command(
      cli() + " explain --data " + dir.path + "/d.csv --label nope");
  CHECK(bad_label.exit_code == 2);  // runtime: column not found
  CHECK(bad_label.output.find("nope") != std::string::npos);
}

TEST_CASE("explain with an external constant-1 oracle fills the box") {
  const TempDir dir;
  // two rows so the bounding box is non-degenerate
  write_file(dir.path + "/toy.csv", "a,b\n0.0,0.0\n1.0,2.0\n");
  const std::string report_path = dir.path + "/report.json";
  const CommandResult r = run_command(
      cli() + " explain --data " + dir.path + "/toy.csv --oracle-cmd '" +
      std::string(ORACLE_CHILD_PATH) +
      " --constant-one' --n-positives 10 --node-budget 10 "
      "--audit-samples 200 --out " + report_path);
  REQUIRE(r.exit_code == 0);

  const json report = read_json(report_path);
  CHECK(report.at("box").at("lower") == json::array({0.0, 0.0}));
  CHECK(report.at("box").at("upper") == json::array({1.0, 2.0}));
  CHECK(report.at("log10_volume").get<double>() ==
        doctest::Approx(std::log10(2.0)));
  CHECK(report.at("purity_audit").at("fraction").get<double>() == 1.0);
  CHECK(report.at("config").at("seed") == 0);
}

TEST_CASE("explain on a 1-row CSV yields the degenerate full box") {
  const TempDir dir;
  write_file(dir.path + "/one.csv", "a,b\n0.25,0.75\n");
  const std::string report_path = dir.path + "/report.json";
  const CommandResult r = run_command(
      cli() + " explain --data " + dir.path + "/one.csv --oracle-cmd '" +
      std::string(ORACLE_CHILD_PATH) +
      " --constant-one' --n-positives 5 --node-budget 10 "
      "--audit-samples 50 --out " + report_path);
  REQUIRE(r.exit_code == 0);
  const json report = read_json(report_path);
  CHECK(report.at("box").at("lower") == report.at("box").at("upper"));
  CHECK(report.at("box").at("lower") == json::array({0.25, 0.75}));
  // -inf serializes as null
  CHECK(report.at("log10_volume").is_null());
}

TEST_CASE("explain, audit, tampered audit, replay on a trained model") {
  const TempDir dir;
  write_file(dir.path + "/d.csv", toy_dataset_csv());
  const std::string report_path = dir.path + "/report.json";
  const CommandResult r = run_command(
      cli() + " explain --data " + dir.path +
      "/d.csv --label y --anchor-row 3 --surrogate linear --n-positives 20 "
      "--node-budget 30 --audit-samples 500 --seed 7 --out " + report_path);
  REQUIRE(r.exit_code == 0);
  const json report = read_json(report_path);
  CHECK(report.at("oracle").at("kind") == "classification");

  // audit of an honest report passes
  const CommandResult audit = run_command(
      cli() + " audit --report " + report_path + " --samples 2000");
  CHECK(audit.exit_code == 0);
  CHECK(audit.output.find("audit") != std::string::npos);

  // replay reproduces the report bit-for-bit (timing aside)
  const CommandResult replay = run_command(
      cli() + " replay --report " + report_path + " --out " + dir.path +
      "/replayed.json");
  CHECK(replay.exit_code == 0);
  CHECK(replay.output.find("matches") != std::string::npos);
  json a = read_json(report_path);
  json b = read_json(dir.path + "/replayed.json");
  a.erase("timing");
  b.erase("timing");
  CHECK(a == b);
}

TEST_CASE("audit detects a hand-widened box") {
  const TempDir dir;
  // Interval oracle: faithful iff |x0| < 0.5. Build a legitimate report
  // anchored at a faithful row, then widen the box far past the faithful
  // region.
  write_file(dir.path + "/grid.csv", "x0\n-5.0\n0.0\n5.0\n");
  const std::string report_path = dir.path + "/report.json";
  const CommandResult r = run_command(
      cli() + " explain --data " + dir.path + "/grid.csv --anchor-row 1 "
      "--oracle-cmd '" + std::string(ORACLE_CHILD_PATH) +
      "' --n-positives 10 --node-budget 10 --audit-samples 500 --out " +
      report_path);
  REQUIRE(r.exit_code == 0);

  json report = read_json(report_path);
  report["box"]["lower"][0] = -4.0;
  report["box"]["upper"][0] = 4.0;
  write_file(report_path, report.dump());

  const CommandResult audit = run_command(
      cli() + " audit --report " + report_path + " --samples 4000");
  CHECK(audit.exit_code == 3);
  CHECK(audit.output.find("FAILED") != std::string::npos);
}

TEST_CASE("bench clusters writes runs, table, and plot") {
  const TempDir dir;
  write_file(dir.path + "/bench.cfg",
             "dim = 2\n"
             "n_anchors = 1\n"
             "n_positives = 15\n"
             "node_budget = 20\n"
             "audit_samples = 300\n"
             "methods = anchor,radial\n"
             "seed = 5\n");
  const CommandResult r = run_command(
      cli() + " bench clusters --config " + dir.path + "/bench.cfg --out " +
      dir.path + "/out --jobs 2");
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir.path + "/out/runs.jsonl"));
  CHECK(std::filesystem::exists(dir.path + "/out/table.csv"));
  CHECK(std::filesystem::exists(dir.path + "/out/plot_d2.json"));
  CHECK(r.output.find("coverage_mean") != std::string::npos);

  const CommandResult bad = run_command(
      cli() + " bench nonsense --out " + dir.path + "/out2");
  CHECK(bad.exit_code == 1);
}
