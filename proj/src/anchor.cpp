#include "anchorbox/anchor.hpp"

#include <string>
#include <utility>

namespace anchorbox {

namespace {

void validate_params(const AnchorParams& p) {
  if (!(p.rho > 0.0) || !(p.rho < 1.0)) {
    throw std::invalid_argument("rho must lie in (0, 1)");
  }
  if (!(p.delta > 0.0) || !(p.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (p.n_positives < 1) throw std::invalid_argument("N must be >= 1");
  if (p.node_budget < 1) throw std::invalid_argument("T must be >= 1");
  if (p.sample_cap < 1) throw std::invalid_argument("sample cap must be >= 1");
}

}  // namespace

AnchorRun::AnchorRun(SearchSpace space, OraclePtr oracle, AnchorParams params)
    : space_(std::move(space)),
      oracle_(std::move(oracle)),
      params_(params),
      root_rng_(params.seed),
      split_rng_(root_rng_.derive("split")),
      streams_{root_rng_.derive("sampling"), root_rng_.derive("testing"),
               root_rng_.derive("expansion")},
      sched_(params.delta, params.rho),
      base_case_(space_.bounds.dim()) {
  validate_params(params_);
  validate_box(space_.bounds);
  if (!contains(space_.bounds, space_.anchor)) {
    throw std::invalid_argument("anchor lies outside the search bounds");
  }
  evals_at_start_ = oracle_->eval_count();
  if (oracle_->evaluate(space_.anchor) != 1) {
    throw CertificationImpossibleError(
        "the anchor point itself is not faithful: e(anchor) = 0");
  }
}

Box AnchorRun::solve_with_retry(const FeatureSet& active, Box bounds) {
  SolveParams solve;
  solve.n_positives = params_.n_positives;
  solve.node_budget = params_.node_budget;
  solve.sample_cap = params_.sample_cap;
  solve.expansion = params_.expansion;
  solve.reuse_samples = params_.reuse_samples;

  for (int attempt = 0;; ++attempt) {
    try {
      return solve_restricted(active, bounds, space_.anchor, *oracle_, solve,
                              sched_, store_, streams_);
    } catch (const PositivesTooRareError& e) {
      if (attempt >= 3) {
        throw CertificationImpossibleError(
            std::string("positives too rare after 3 space contractions: ") +
            e.what());
      }
      // Contract the offending space toward the anchor and retry.
      for (const std::size_t d : active) {
        bounds.lower[d] = 0.5 * (bounds.lower[d] + space_.anchor[d]);
        bounds.upper[d] = 0.5 * (bounds.upper[d] + space_.anchor[d]);
      }
    }
  }
}

Box AnchorRun::find_anchor(const FeatureSet& active, Box bounds) {
  if (active.empty()) {
    throw std::invalid_argument("find_anchor needs a nonempty feature set");
  }
  if (active.size() == 1) {
    const Box out = solve_with_retry(active, std::move(bounds));
    const std::size_t d = active[0];
    base_case_[d] = std::array<double, 2>{out.lower[d], out.upper[d]};
    return out;
  }

  auto [first, second] = balanced_random_split(active, split_rng_);
  const Box solved_first = find_anchor(first, bounds);
  const Box solved_second = find_anchor(second, bounds);
  // Both half-solutions contain the anchor, so the intersection is the
  // tightest box consistent with both.
  Box merged = intersect(solved_first, solved_second);

  for (std::size_t i = 1; i <= first.size(); ++i) {
    merged = solve_with_retry(join(first, second.prefix(i)), std::move(merged));
    merged = solve_with_retry(join(second, first.prefix(i)), std::move(merged));
  }
  return merged;
}

GuaranteeReport AnchorRun::run_to_report() {
  const std::size_t dim = space_.bounds.dim();
  const FeatureSet all = FeatureSet::full(dim);

  GuaranteeReport report;
  report.box = find_anchor(all, space_.bounds);
  report.log10_volume = log10_volume(report.box, all);
  report.evals = oracle_->eval_count() - evals_at_start_;
  report.tests_issued = sched_.tests_issued();
  report.delta_spent = sched_.delta_spent();
  report.per_feature_widths.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    report.per_feature_widths[d] = report.box.width(d);
  }

  Rng audit_rng = root_rng_.derive("audit");
  std::int64_t faithful = 0;
  for (std::int64_t i = 0; i < params_.audit_samples; ++i) {
    Point x(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = audit_rng.uniform(report.box.lower[d], report.box.upper[d]);
    }
    faithful += oracle_->evaluate(x);
  }
  report.purity_audit.samples = params_.audit_samples;
  report.purity_audit.fraction =
      params_.audit_samples > 0
          ? static_cast<double>(faithful) / params_.audit_samples
          : 1.0;
  return report;
}

}  // namespace anchorbox
