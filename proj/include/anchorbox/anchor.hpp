#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "anchorbox/geometry.hpp"
#include "anchorbox/oracle.hpp"
#include "anchorbox/solver.hpp"

namespace anchorbox {

// Thrown when no certified region exists under the given settings: the anchor
// itself is unfaithful, or positives stay too rare after every retry.
class CertificationImpossibleError : public std::runtime_error {
 public:
  explicit CertificationImpossibleError(const std::string& what)
      : std::runtime_error(what) {}
};

struct AnchorParams {
  double rho = 0.99;
  double delta = 0.01;
  std::int64_t n_positives = 100;  // N
  std::int64_t node_budget = 100;  // T
  std::int64_t sample_cap = 100000;
  ExpansionOrder expansion = ExpansionOrder::largest_gain_first;
  bool reuse_samples = true;
  std::int64_t audit_samples = 10000;
  std::uint64_t seed = 0;
};

struct PurityAudit {
  std::int64_t samples = 0;
  double fraction = 0.0;
};

struct GuaranteeReport {
  Box box;
  double log10_volume = 0.0;
  std::uint64_t evals = 0;         // oracle calls consumed by the algorithm
  std::uint64_t tests_issued = 0;
  double delta_spent = 0.0;
  PurityAudit purity_audit;        // audit calls are not counted in evals
  std::vector<double> per_feature_widths;
};

// One full divide-and-conquer run: owns the run-wide test scheduler, sample
// store, and derived random streams. A run is sequential; independent runs
// with their own oracles are freely parallel.
class AnchorRun {
 public:
  // Verifies e(anchor) = 1 (one counted oracle call).
  AnchorRun(SearchSpace space, OraclePtr oracle, AnchorParams params);

  // Recursive solver; exposed so baselines and tests can drive parts of it.
  Box find_anchor(const FeatureSet& active, Box bounds);

  // find_anchor over the full feature set plus volume, accounting, and a
  // Monte-Carlo purity audit of the final box.
  GuaranteeReport run_to_report();

  const SearchSpace& space() const { return space_; }
  const AnchorParams& params() const { return params_; }
  FaithfulnessOracle& oracle() { return *oracle_; }
  TestScheduler& scheduler() { return sched_; }
  SampleStore& store() { return store_; }
  SolverStreams& streams() { return streams_; }
  Rng derive_rng(std::string_view name, std::uint64_t index = 0) const {
    return root_rng_.derive(name, index);
  }

  // Solved interval per feature from the size-1 base cases, where reached.
  const std::vector<std::optional<std::array<double, 2>>>& base_case_bounds()
      const {
    return base_case_;
  }

 private:
  Box solve_with_retry(const FeatureSet& active, Box bounds);

  SearchSpace space_;
  OraclePtr oracle_;
  AnchorParams params_;
  Rng root_rng_;
  Rng split_rng_;
  SolverStreams streams_;
  TestScheduler sched_;
  SampleStore store_;
  std::uint64_t evals_at_start_ = 0;
  std::vector<std::optional<std::array<double, 2>>> base_case_;
};

}  // namespace anchorbox
