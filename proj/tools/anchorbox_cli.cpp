// Command-line surface: certify guarantee regions for single anchors, run the
// benchmark families, and audit or replay stored reports.
//
// Exit codes: 0 ok, 1 usage, 2 runtime failure, 3 certification impossible
// (or a failed audit).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "anchorbox/anchor.hpp"
#include "anchorbox/baselines.hpp"
#include "anchorbox/data.hpp"
#include "anchorbox/experiments.hpp"
#include "anchorbox/external_oracle.hpp"
#include "anchorbox/models.hpp"

using namespace anchorbox;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExplainOptions {
  std::string data;
  std::string label;
  bool binarize_median = false;
  std::size_t anchor_row = 0;
  std::string surrogate = "linear";
  double faith_tolerance = 0.10;
  double rho = 0.99;
  double delta = 0.01;
  std::int64_t n_positives = 100;
  std::int64_t node_budget = 100;
  std::int64_t sample_cap = 100000;
  std::string expansion_order = "largest";
  bool strict_sampling = false;
  std::int64_t audit_samples = 10000;
  std::uint64_t seed = 0;
  std::string oracle_cmd;
  int oracle_timeout_ms = 60000;
  std::string out = "report.json";
};

ExpansionOrder parse_order(const std::string& name) {
  if (name == "largest" || name == "largest_gain_first") {
    return ExpansionOrder::largest_gain_first;
  }
  if (name == "random") return ExpansionOrder::random;
  throw UsageError("unknown expansion order: " + name);
}

SurrogateFamily parse_family(const std::string& name) {
  if (name == "linear") return SurrogateFamily::linear;
  if (name == "tree") return SurrogateFamily::tree;
  throw UsageError("unknown surrogate family: " + name);
}

void validate_common(double rho, double delta, std::int64_t n,
                     std::int64_t t) {
  if (!(rho > 0.0 && rho < 1.0)) throw UsageError("rho must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw UsageError("delta must lie in (0,1)");
  }
  if (n < 1) throw UsageError("n-positives must be >= 1");
  if (t < 1) throw UsageError("node-budget must be >= 1");
}

AnchorParams anchor_params(const ExplainOptions& o) {
  AnchorParams p;
  p.rho = o.rho;
  p.delta = o.delta;
  p.n_positives = o.n_positives;
  p.node_budget = o.node_budget;
  p.sample_cap = o.sample_cap;
  p.expansion = parse_order(o.expansion_order);
  p.reuse_samples = !o.strict_sampling;
  p.audit_samples = o.audit_samples;
  p.seed = o.seed;
  return p;
}

json config_json(const ExplainOptions& o) {
  return json{{"data", o.data},
              {"label", o.label},
              {"binarize_median", o.binarize_median},
              {"anchor_row", o.anchor_row},
              {"surrogate", o.surrogate},
              {"faith_tolerance", o.faith_tolerance},
              {"rho", o.rho},
              {"delta", o.delta},
              {"n_positives", o.n_positives},
              {"node_budget", o.node_budget},
              {"sample_cap", o.sample_cap},
              {"expansion_order", o.expansion_order},
              {"strict_sampling", o.strict_sampling},
              {"audit_samples", o.audit_samples},
              {"seed", o.seed},
              {"oracle_cmd", o.oracle_cmd},
              {"oracle_timeout_ms", o.oracle_timeout_ms}};
}

OraclePtr oracle_from_spec(const json& spec, int timeout_ms) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "external") {
    return spawn_external_oracle(spec.at("command").get<std::string>(),
                                 timeout_ms);
  }
  if (kind == "classification") {
    const ModelPtr f = model_from_json(spec.at("f"));
    const ModelPtr g = model_from_json(spec.at("g"));
    return std::make_shared<ClassificationFaithfulness>(
        probs_fn(f), probs_fn(g), spec.at("tolerance").get<double>());
  }
  throw std::runtime_error("unknown oracle kind in report: " + kind);
}

json run_explain_to_json(const ExplainOptions& o) {
  validate_common(o.rho, o.delta, o.n_positives, o.node_budget);
  const auto start = std::chrono::steady_clock::now();

  Dataset dataset;
  json oracle_spec;
  OraclePtr oracle;
  const Rng root(o.seed);

  if (!o.oracle_cmd.empty()) {
    // External oracles work in the raw units of the CSV.
    dataset = load_csv_features(o.data);
    if (!o.label.empty()) {
      const auto it = std::find(dataset.feature_names.begin(),
                                dataset.feature_names.end(), o.label);
      if (it == dataset.feature_names.end()) {
        throw UsageError("label column '" + o.label + "' not found");
      }
      const std::size_t idx =
          static_cast<std::size_t>(it - dataset.feature_names.begin());
      dataset.feature_names.erase(dataset.feature_names.begin() + idx);
      for (Point& row : dataset.rows) {
        row.erase(row.begin() + static_cast<std::ptrdiff_t>(idx));
      }
      dataset.mean.pop_back();
      dataset.stdev.pop_back();
    }
    oracle_spec = json{{"kind", "external"}, {"command", o.oracle_cmd}};
    oracle = spawn_external_oracle(o.oracle_cmd, o.oracle_timeout_ms);
  } else {
    if (o.label.empty()) {
      throw UsageError("--label is required unless --oracle-cmd is given");
    }
    dataset = load_csv(o.data, o.label, o.binarize_median);
  }

  if (o.anchor_row >= dataset.size()) {
    throw UsageError("anchor row " + std::to_string(o.anchor_row) +
                     " out of range (dataset has " +
                     std::to_string(dataset.size()) + " rows)");
  }
  const Point anchor = dataset.rows[o.anchor_row];
  const Box bbox = data_bounding_box(dataset);

  double sigma = 0.0;
  if (o.oracle_cmd.empty()) {
    Rng train_rng = root.derive("train");
    const ModelPtr f = train_forest(dataset.rows, dataset.labels,
                                    dataset.n_classes, train_rng);
    const SurrogateFit fit =
        fit_surrogate(f, anchor, parse_family(o.surrogate),
                      FaithSpec{FaithSpec::Kind::classification, 0.1,
                                o.faith_tolerance},
                      root.derive("fit"));
    sigma = fit.sigma;
    oracle_spec = json{{"kind", "classification"},
                       {"tolerance", o.faith_tolerance},
                       {"f", f->to_json()},
                       {"g", fit.surrogate->to_json()}};
    oracle = std::make_shared<ClassificationFaithfulness>(
        probs_fn(f), probs_fn(fit.surrogate), o.faith_tolerance);
  }

  AnchorRun run(make_search_space(bbox, anchor), oracle, anchor_params(o));
  const GuaranteeReport report = run.run_to_report();
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;

  json out{{"schema", "anchorbox-report-v1"},
           {"config", config_json(o)},
           {"feature_names", dataset.feature_names},
           {"space", {{"lower", bbox.lower}, {"upper", bbox.upper}}},
           {"anchor", anchor},
           {"oracle", oracle_spec},
           {"box",
            {{"lower", report.box.lower}, {"upper", report.box.upper}}},
           {"log10_volume", report.log10_volume},
           {"per_feature_widths", report.per_feature_widths},
           {"evals", report.evals},
           {"tests_issued", report.tests_issued},
           {"delta_spent", report.delta_spent},
           {"purity_audit",
            {{"samples", report.purity_audit.samples},
             {"fraction", report.purity_audit.fraction}}},
           {"surrogate_sigma", sigma},
           {"timing", {{"wall_seconds", elapsed.count()}}}};
  return out;
}

json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  json report;
  in >> report;
  return report;
}

// --- bench configuration -----------------------------------------------------

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) out[key] = value;
  }
  return out;
}

class BenchConfig {
 public:
  explicit BenchConfig(std::map<std::string, std::string> kv)
      : kv_(std::move(kv)) {}

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  double num(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : std::stod(it->second);
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : std::stoll(it->second);
  }
  bool flag(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return it->second == "true" || it->second == "1" || it->second == "yes";
  }
  std::vector<std::int64_t> int_list(const std::string& key,
                                     std::vector<std::int64_t> fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::int64_t> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
    return out;
  }

 private:
  std::map<std::string, std::string> kv_;
};

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "anchor") {
      out.push_back(Method::anchor);
    } else if (item == "greedy") {
      out.push_back(Method::greedy);
    } else if (item == "radial") {
      out.push_back(Method::radial);
    } else {
      throw UsageError("unknown method: " + item);
    }
  }
  if (out.empty()) throw UsageError("empty method list");
  return out;
}

struct BenchCli {
  std::string family;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::int64_t> n_anchors_override;
  std::optional<int> jobs_override;
};

int run_bench(const BenchCli& cli) {
  const BenchConfig cfg(cli.config_path.empty()
                            ? std::map<std::string, std::string>{}
                            : parse_config_file(cli.config_path));

  ExperimentParams params;
  params.anchor.rho = cfg.num("rho", 0.99);
  params.anchor.delta = cfg.num("delta", 0.01);
  params.anchor.n_positives = cfg.integer("n_positives", 100);
  params.anchor.node_budget = cfg.integer("node_budget", 100);
  params.anchor.sample_cap = cfg.integer("sample_cap", 100000);
  params.anchor.expansion = parse_order(cfg.str("expansion_order", "largest"));
  params.anchor.reuse_samples = cfg.flag("reuse_samples", true);
  params.anchor.audit_samples = cfg.integer("audit_samples", 10000);
  params.anchor.seed = static_cast<std::uint64_t>(cfg.integer("seed", 0));
  params.n_anchors = static_cast<std::size_t>(cfg.integer("n_anchors", 20));
  params.surrogate = parse_family(cfg.str("surrogate", "linear"));
  params.faith_tolerance = cfg.num("faith_tolerance", 0.10);
  params.jobs = static_cast<int>(
      cfg.integer("jobs", std::thread::hardware_concurrency()));

  if (cli.seed_override) params.anchor.seed = *cli.seed_override;
  if (cli.n_anchors_override) {
    params.n_anchors = static_cast<std::size_t>(*cli.n_anchors_override);
  }
  if (cli.jobs_override) params.jobs = *cli.jobs_override;
  validate_common(params.anchor.rho, params.anchor.delta,
                  params.anchor.n_positives, params.anchor.node_budget);

  std::filesystem::create_directories(cli.out_dir);
  const std::string runs_path = cli.out_dir + "/runs.jsonl";
  const std::string table_path = cli.out_dir + "/table.csv";

  if (cli.family == "volume") {
    const Dataset data = load_csv(cfg.str("dataset", ""),
                                  cfg.str("label", "label"),
                                  cfg.flag("binarize_median", false));
    const auto methods =
        parse_methods(cfg.str("methods", "anchor,greedy,radial"));
    const VolumeBenchResult result = run_volume_bench(data, methods, params);
    write_jsonl(runs_path, result.records());
    write_text(table_path, result.table_csv());
    std::cout << result.table_csv();
  } else if (cli.family == "clusters") {
    const std::size_t dim =
        static_cast<std::size_t>(cfg.integer("dim", 2));
    const auto methods =
        parse_methods(cfg.str("methods", "anchor,greedy,radial"));
    const ClusterBenchResult result = run_cluster_bench(dim, methods, params);
    write_jsonl(runs_path, result.records());
    write_text(table_path, result.table_csv());
    if (!result.plot.is_null()) {
      write_text(cli.out_dir + "/plot_d2.json", result.plot.dump(2));
    }
    std::cout << result.table_csv();
  } else if (cli.family == "honesty") {
    const Dataset data = load_csv(cfg.str("dataset", ""),
                                  cfg.str("label", "label"),
                                  cfg.flag("binarize_median", false));
    std::optional<std::size_t> k;
    if (cfg.str("feature_k", "auto") != "auto") {
      k = static_cast<std::size_t>(cfg.integer("feature_k", 0));
    }
    const HonestyResult result = run_honesty(data, k, params);
    write_jsonl(runs_path, result.records());
    write_text(table_path, result.table_csv());
    std::cout << result.table_csv();
  } else if (cli.family == "hyperparams") {
    const std::size_t dim = static_cast<std::size_t>(cfg.integer("dim", 10));
    const SweepResult result = run_hyperparam_sweep(
        dim, cfg.int_list("n_grid", {10, 30, 100}),
        cfg.int_list("t_grid", {10, 100}), params,
        cfg.num("timeout_sec", 600.0));
    write_jsonl(runs_path, result.records());
    write_text(table_path, result.table_csv());
    std::cout << result.table_csv();
    std::cout << "rho=1 analytic optimum log10 volume: "
              << result.analytic_opt_log10 << "\n";
  } else if (cli.family == "expansion") {
    const std::size_t dim = static_cast<std::size_t>(cfg.integer("dim", 6));
    const AblationKind kind = cfg.str("kind", "half_l1") == "clusters"
                                  ? AblationKind::clusters
                                  : AblationKind::half_l1;
    const AblationResult result = run_expansion_ablation(kind, dim, params);
    write_jsonl(runs_path, result.records());
    write_text(table_path, result.table_csv());
    std::cout << result.table_csv();
  } else {
    throw UsageError("unknown bench family: " + cli.family);
  }
  std::cout << "wrote " << runs_path << " and " << table_path << "\n";
  return 0;
}

int run_audit(const std::string& report_path, std::int64_t samples,
              std::uint64_t seed) {
  const json report = load_report(report_path);
  const OraclePtr oracle = oracle_from_spec(report.at("oracle"), 60000);
  Box box;
  box.lower = report.at("box").at("lower").get<Point>();
  box.upper = report.at("box").at("upper").get<Point>();
  const double rho = report.at("config").at("rho").get<double>();

  Rng rng(seed);
  std::int64_t faithful = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    Point x(box.dim());
    for (std::size_t d = 0; d < box.dim(); ++d) {
      x[d] = rng.uniform(box.lower[d], box.upper[d]);
    }
    faithful += oracle->evaluate(x);
  }
  const double fraction = static_cast<double>(faithful) / samples;
  std::cout << "audit: fraction=" << fraction << " rho=" << rho
            << " samples=" << samples << "\n";
  if (fraction < rho) {
    std::cerr << "audit FAILED: measured purity " << fraction
              << " is below rho=" << rho << "\n";
    return 3;
  }
  std::cout << "audit passed\n";
  return 0;
}

json strip_timing(json j) {
  j.erase("timing");
  return j;
}

int run_replay(const std::string& report_path, const std::string& out_path) {
  const json original = load_report(report_path);
  const json cfg = original.at("config");
  ExplainOptions o;
  o.data = cfg.at("data").get<std::string>();
  o.label = cfg.at("label").get<std::string>();
  o.binarize_median = cfg.at("binarize_median").get<bool>();
  o.anchor_row = cfg.at("anchor_row").get<std::size_t>();
  o.surrogate = cfg.at("surrogate").get<std::string>();
  o.faith_tolerance = cfg.at("faith_tolerance").get<double>();
  o.rho = cfg.at("rho").get<double>();
  o.delta = cfg.at("delta").get<double>();
  o.n_positives = cfg.at("n_positives").get<std::int64_t>();
  o.node_budget = cfg.at("node_budget").get<std::int64_t>();
  o.sample_cap = cfg.at("sample_cap").get<std::int64_t>();
  o.expansion_order = cfg.at("expansion_order").get<std::string>();
  o.strict_sampling = cfg.at("strict_sampling").get<bool>();
  o.audit_samples = cfg.at("audit_samples").get<std::int64_t>();
  o.seed = cfg.at("seed").get<std::uint64_t>();
  o.oracle_cmd = cfg.at("oracle_cmd").get<std::string>();
  o.oracle_timeout_ms = cfg.at("oracle_timeout_ms").get<int>();

  const json replayed = run_explain_to_json(o);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << replayed.dump(2) << "\n";
  }
  if (strip_timing(replayed) != strip_timing(original)) {
    std::cerr << "replay MISMATCH: the stored report does not reproduce\n";
    return 2;
  }
  std::cout << "replay matches the stored report\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "anchorbox: statistically certified axis-aligned guarantee regions "
      "for local surrogate explanations"};
  app.require_subcommand(1);

  ExplainOptions eo;
  CLI::App* explain = app.add_subcommand(
      "explain", "certify a guarantee region around one anchor row");
  explain->add_option("--data", eo.data, "CSV with a header row")->required();
  explain->add_option("--label", eo.label, "label column name");
  explain->add_flag("--binarize-median", eo.binarize_median,
                    "binarize real labels at their median");
  explain->add_option("--anchor-row", eo.anchor_row, "row to explain");
  explain->add_option("--surrogate", eo.surrogate, "linear|tree");
  explain->add_option("--faith-tolerance", eo.faith_tolerance,
                      "classification confidence tolerance");
  explain->add_option("--rho", eo.rho, "purity target in (0,1)");
  explain->add_option("--delta", eo.delta, "error budget in (0,1)");
  explain->add_option("--n-positives", eo.n_positives,
                      "positive samples per restricted solve");
  explain->add_option("--node-budget", eo.node_budget,
                      "search nodes per max-box call");
  explain->add_option("--sample-cap", eo.sample_cap,
                      "fresh-sample cap per restricted solve");
  explain->add_option("--expansion-order", eo.expansion_order,
                      "largest|random");
  explain->add_flag("--strict-sampling", eo.strict_sampling,
                    "disable cross-call sample reuse");
  explain->add_option("--audit-samples", eo.audit_samples,
                      "Monte-Carlo purity audit size");
  explain->add_option("--seed", eo.seed, "run seed");
  explain->add_option("--oracle-cmd", eo.oracle_cmd,
                      "child process serving the faithfulness predicate");
  explain->add_option("--oracle-timeout-ms", eo.oracle_timeout_ms,
                      "child response timeout");
  explain->add_option("--out", eo.out, "report path");

  BenchCli bc;
  CLI::App* bench =
      app.add_subcommand("bench", "run an experiment family");
  bench->add_option("family", bc.family,
                    "volume|clusters|honesty|hyperparams|expansion")
      ->required();
  bench->add_option("--config", bc.config_path, "flat key=value config file");
  bench->add_option("--out", bc.out_dir, "output directory")->required();
  std::int64_t bench_seed = -1;
  std::int64_t bench_anchors = -1;
  int bench_jobs = -1;
  bench->add_option("--seed", bench_seed, "override config seed");
  bench->add_option("--n-anchors", bench_anchors, "override anchor count");
  bench->add_option("--jobs", bench_jobs, "worker threads");

  std::string audit_report;
  std::int64_t audit_samples = 100000;
  std::uint64_t audit_seed = 1;
  CLI::App* audit =
      app.add_subcommand("audit", "recheck the purity of a stored report");
  audit->add_option("--report", audit_report, "report path")->required();
  audit->add_option("--samples", audit_samples, "audit sample count");
  audit->add_option("--seed", audit_seed, "audit sampling seed");

  std::string replay_report;
  std::string replay_out;
  CLI::App* replay = app.add_subcommand(
      "replay", "re-run a report's embedded config and compare");
  replay->add_option("--report", replay_report, "report path")->required();
  replay->add_option("--out", replay_out, "where to write the replayed report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (explain->parsed()) {
      const json report = run_explain_to_json(eo);
      std::ofstream out(eo.out);
      if (!out) throw std::runtime_error("cannot write " + eo.out);
      out << report.dump(2) << "\n";
      std::cout << "wrote " << eo.out
                << " (log10 volume: " << report.at("log10_volume")
                << ", evals: " << report.at("evals") << ")\n";
      return 0;
    }
    if (bench->parsed()) {
      if (bench_seed >= 0) {
        bc.seed_override = static_cast<std::uint64_t>(bench_seed);
      }
      if (bench_anchors >= 0) bc.n_anchors_override = bench_anchors;
      if (bench_jobs >= 0) bc.jobs_override = bench_jobs;
      return run_bench(bc);
    }
    if (audit->parsed()) {
      if (audit_samples < 1) throw UsageError("samples must be >= 1");
      return run_audit(audit_report, audit_samples, audit_seed);
    }
    if (replay->parsed()) {
      return run_replay(replay_report, replay_out);
    }
    throw UsageError("no subcommand selected");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const CsvSchemaError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const CertificationImpossibleError& e) {
    std::cerr << "certification impossible: " << e.what() << "\n";
    return 3;
  } catch (const PositivesTooRareError& e) {
    std::cerr << "certification impossible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
