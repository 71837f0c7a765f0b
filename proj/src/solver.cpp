#include "anchorbox/solver.hpp"

#include <cmath>
#include <string>

namespace anchorbox {

TestScheduler::TestScheduler(double delta, double rho)
    : delta_(delta), rho_(rho) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw std::invalid_argument("rho must lie in (0, 1)");
  }
}

TestScheduler::IssuedTest TestScheduler::next_test() {
  const double i = static_cast<double>(counter_);
  const double log_ip1 = std::log(i + 1.0);
  const double significance =
      delta_ / (i * log_ip1 * log_ip1 * kScheduleTailConstant);
  const std::int64_t samples = static_cast<std::int64_t>(
      std::ceil(std::log(significance) / std::log(rho_)));
  ++counter_;
  spent_ += significance;
  return IssuedTest{significance, samples};
}

std::uint64_t active_signature(const FeatureSet& active) {
  std::vector<std::size_t> sorted = active.indices();
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::size_t d : sorted) {
    h ^= d + 1;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

Point sample_in_box(const Box& box, const FeatureSet& active,
                    const Point& anchor, Rng& rng) {
  Point x = anchor;
  for (const std::size_t d : active) {
    x[d] = rng.uniform(box.lower[d], box.upper[d]);
  }
  return x;
}

}  // namespace

CertifyResult certify_box(const Box& box, const FeatureSet& active,
                          const Point& anchor, FaithfulnessOracle& oracle,
                          TestScheduler& sched, Rng& rng) {
  const TestScheduler::IssuedTest test = sched.next_test();
  CertifyResult result;
  result.significance = test.significance;
  result.samples = test.samples;
  for (std::int64_t m = 0; m < test.samples; ++m) {
    Point x = sample_in_box(box, active, anchor, rng);
    if (oracle.evaluate(x) == 1) {
      result.positives_sampled.push_back(std::move(x));
    } else {
      result.counterexamples.push_back(std::move(x));
    }
  }
  result.passed = result.counterexamples.empty();
  return result;
}

Box solve_restricted(const FeatureSet& active, const Box& space,
                     const Point& anchor, FaithfulnessOracle& oracle,
                     const SolveParams& params, TestScheduler& sched,
                     SampleStore& store, SolverStreams& streams) {
  if (active.empty()) {
    throw std::invalid_argument("solve_restricted needs active dimensions");
  }
  validate_box(space);
  if (!contains(space, anchor)) {
    throw std::invalid_argument("anchor outside the restricted space");
  }

  const std::uint64_t signature = active_signature(active);
  std::vector<bool> active_mask(anchor.size(), false);
  for (const std::size_t d : active) active_mask[d] = true;
  // On this call's slice: inactive coordinates pinned exactly to the anchor.
  auto on_slice = [&](const Point& x) {
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (!active_mask[d] && x[d] != anchor[d]) return false;
    }
    return true;
  };

  // Points in scope for the max-box. Stored negatives apply whenever they lie
  // on this slice inside the current space; stored positives additionally
  // require the same active set, since the count objective needs positives
  // uniform over this space.
  std::vector<Point> positives;
  std::vector<Point> negatives;
  if (params.reuse_samples) {
    for (const SampleStore::TaggedPoint& t : store.positives) {
      if (t.active_sig == signature && inside_on_active(space, t.x, active) &&
          on_slice(t.x)) {
        positives.push_back(t.x);
      }
    }
    for (const Point& x : store.negatives) {
      if (inside_on_active(space, x, active) && on_slice(x)) {
        negatives.push_back(x);
      }
    }
  }

  std::int64_t fresh = 0;
  while (static_cast<std::int64_t>(positives.size()) < params.n_positives) {
    if (fresh >= params.sample_cap) {
      throw PositivesTooRareError(
          "only " + std::to_string(positives.size()) + " of " +
          std::to_string(params.n_positives) + " positives found after " +
          std::to_string(fresh) + " samples over " + active.to_string());
    }
    Point x = sample_in_box(space, active, anchor, streams.sampling);
    const int label = oracle.evaluate(x);
    ++fresh;
    if (params.reuse_samples) {
      if (label) {
        store.positives.push_back({x, signature});
      } else {
        store.negatives.push_back(x);
      }
    }
    (label ? positives : negatives).push_back(std::move(x));
  }

  while (true) {
    MaxBoxInstance inst;
    inst.positives = positives;
    inst.negatives = negatives;
    inst.anchor = anchor;
    inst.space = space;
    inst.active = active;
    inst.node_budget = params.node_budget;
    const Box proposal = find_max_box(inst, params.expansion,
                                      streams.expansion);

    CertifyResult cert =
        certify_box(proposal, active, anchor, oracle, sched, streams.testing);
    if (params.reuse_samples) {
      for (const Point& x : cert.counterexamples) store.negatives.push_back(x);
    }
    if (cert.passed) return proposal;
    for (Point& x : cert.counterexamples) negatives.push_back(std::move(x));
  }
}

}  // namespace anchorbox
