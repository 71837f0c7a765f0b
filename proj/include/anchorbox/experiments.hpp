#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchorbox/anchor.hpp"
#include "anchorbox/baselines.hpp"
#include "anchorbox/data.hpp"
#include "anchorbox/models.hpp"

namespace anchorbox {

enum class Method { anchor, greedy, radial };
std::string method_name(Method m);

struct ExperimentParams {
  AnchorParams anchor;  // rho, delta, N, T, seed, expansion, audit samples
  std::size_t n_anchors = 20;
  SurrogateFamily surrogate = SurrogateFamily::linear;
  double faith_tolerance = 0.10;
  int jobs = 1;
};

// Work pool over [0, count): each item must be independent. The first
// exception aborts remaining items and is rethrown.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& values);

// --- Per-anchor comparison machinery (volume and cluster benches) ----------

struct MethodOutcome {
  Method method = Method::anchor;
  bool ok = false;
  std::string error;
  double vol_log10 = 0.0;
  std::uint64_t evals = 0;
  bool certified = false;
  double coverage = -1.0;          // cluster bench only, else -1
  double purity_fraction = -1.0;   // anchor method audit, else -1
  double delta_spent = 0.0;
  std::uint64_t tests_issued = 0;
  nlohmann::json region;           // box {lower,upper} or ball {center,radius}
};

struct AnchorCase {
  std::size_t anchor_index = 0;
  bool ok = false;
  std::string error;
  double sigma = 0.0;  // accepted surrogate perturbation scale
  std::vector<MethodOutcome> methods;
};

struct VolumeBenchResult {
  std::vector<AnchorCase> cases;
  std::vector<nlohmann::json> records() const;
  std::string table_csv() const;
};

VolumeBenchResult run_volume_bench(const Dataset& data,
                                   const std::vector<Method>& methods,
                                   const ExperimentParams& params);

struct ClusterBenchResult {
  std::size_t dim = 0;
  std::vector<AnchorCase> cases;
  nlohmann::json plot;  // points, assignments, regions of the first ok case
  std::vector<nlohmann::json> records() const;
  std::string table_csv() const;
};

ClusterBenchResult run_cluster_bench(std::size_t dim,
                                     const std::vector<Method>& methods,
                                     const ExperimentParams& params);

// --- Honest vs dishonest masked-feature comparison --------------------------

struct HonestyRow {
  std::size_t anchor_index = 0;
  double width_honest = 0.0;
  double width_dishonest = 0.0;
  std::uint64_t evals_honest = 0;
  std::uint64_t evals_dishonest = 0;
  double delta_spent_honest = 0.0;
  double delta_spent_dishonest = 0.0;
};

struct HonestyResult {
  std::size_t feature_k = 0;
  std::vector<HonestyRow> rows;
  std::vector<nlohmann::json> records() const;
  std::string table_csv() const;
};

// feature_k empty selects the feature with the largest absolute weight of a
// logistic model trained on the whole dataset. Anchors come from the test
// split, filtered to model confidence <= 0.80 and to surrogates that are
// demonstrably unfaithful to the unmasked model near the anchor along k.
HonestyResult run_honesty(const Dataset& data,
                          std::optional<std::size_t> feature_k,
                          const ExperimentParams& params);

// --- Hyperparameter sweep on the analytic oracle ---------------------------

struct SweepCell {
  std::int64_t n_positives = 0;
  std::int64_t node_budget = 0;
  bool timeout = false;
  std::vector<double> vols;
  std::vector<double> evals;
  std::vector<double> wall_seconds;
};

struct SweepResult {
  std::size_t dim = 0;
  double analytic_opt_log10 = 0.0;  // rho = 1 optimum
  std::vector<SweepCell> cells;
  std::vector<nlohmann::json> records() const;
  std::string table_csv() const;
};

SweepResult run_hyperparam_sweep(std::size_t dim,
                                 const std::vector<std::int64_t>& n_grid,
                                 const std::vector<std::int64_t>& t_grid,
                                 const ExperimentParams& params,
                                 double timeout_seconds_per_cell);

// --- Expansion-order ablation ------------------------------------------------

enum class AblationKind { half_l1, clusters };

struct AblationPair {
  std::size_t run_index = 0;
  bool ok = false;
  std::string error;
  double vol_largest = 0.0;
  double vol_random = 0.0;
  double evals_largest = 0.0;
  double evals_random = 0.0;
  double coverage_largest = -1.0;
  double coverage_random = -1.0;
  double purity_largest = -1.0;
  double purity_random = -1.0;
};

struct AblationResult {
  AblationKind kind = AblationKind::half_l1;
  std::size_t dim = 0;
  std::vector<AblationPair> pairs;
  std::vector<nlohmann::json> records() const;
  std::string table_csv() const;
};

// Paired runs, identical seeds, differing only in the expansion order.
AblationResult run_expansion_ablation(AblationKind kind, std::size_t dim,
                                      const ExperimentParams& params);

// --- Output helpers ---------------------------------------------------------

void write_jsonl(const std::string& path,
                 const std::vector<nlohmann::json>& records);
void write_text(const std::string& path, const std::string& content);

}  // namespace anchorbox
