#include "anchorbox/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace anchorbox {

double log10_ball_volume(std::size_t dim, double radius) {
  if (radius <= 0.0) return -std::numeric_limits<double>::infinity();
  const double d = static_cast<double>(dim);
  return d * std::log10(radius) + (d / 2.0) * std::log10(3.14159265358979324) -
         std::lgamma(d / 2.0 + 1.0) / std::log(10.0);
}

Point sample_in_ball(const Point& center, double radius, Rng& rng) {
  const std::size_t dim = center.size();
  Point x(dim);
  if (dim <= 10) {
    while (true) {
      double norm_sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = rng.uniform(-radius, radius);
        norm_sq += x[d] * x[d];
      }
      if (norm_sq <= radius * radius) break;
    }
  } else {
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = rng.normal();
      norm_sq += x[d] * x[d];
    }
    const double norm = std::sqrt(std::max(norm_sq, 1e-300));
    const double r =
        radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    for (double& v : x) v *= r / norm;
  }
  for (std::size_t d = 0; d < dim; ++d) x[d] += center[d];
  return x;
}

namespace {

// Shared fixed-M purity test: passes iff all M samples are faithful.
bool run_region_test(const std::function<Point(Rng&)>& sampler,
                     FaithfulnessOracle& oracle, TestScheduler& sched,
                     Rng& rng) {
  const TestScheduler::IssuedTest test = sched.next_test();
  bool ok = true;
  for (std::int64_t m = 0; m < test.samples; ++m) {
    if (oracle.evaluate(sampler(rng)) != 1) ok = false;
  }
  return ok;
}

}  // namespace

RadialResult fit_radial(AnchorRun& run, int steps) {
  const Box& space = run.space().bounds;
  const Point& anchor = run.space().anchor;
  const std::size_t dim = space.dim();

  double diag_sq = 0.0;
  double max_inside = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < dim; ++d) {
    diag_sq += space.width(d) * space.width(d);
    max_inside = std::min(max_inside,
                          std::min(anchor[d] - space.lower[d],
                                   space.upper[d] - anchor[d]));
  }
  const double r_min = 1e-3 * std::sqrt(diag_sq);

  RadialResult result;
  result.region.center = anchor;
  result.log10_volume = -std::numeric_limits<double>::infinity();
  const std::uint64_t evals_before = run.oracle().eval_count();

  if (max_inside > 0.0) {
    std::vector<double> radii;
    if (max_inside <= r_min || steps < 2) {
      radii.push_back(std::min(r_min, max_inside));
    } else {
      const double log_ratio = std::log(max_inside / r_min);
      for (int s = 0; s < steps; ++s) {
        radii.push_back(r_min * std::exp(log_ratio * s / (steps - 1)));
      }
    }
    Rng rng = run.derive_rng("radial");
    for (const double r : radii) {
      const bool passed = run_region_test(
          [&](Rng& g) { return sample_in_ball(anchor, r, g); }, run.oracle(),
          run.scheduler(), rng);
      if (!passed) break;
      result.region.radius = r;
      result.certified = true;
    }
  }
  if (result.certified) {
    result.log10_volume = log10_ball_volume(dim, result.region.radius);
  }
  result.evals = run.oracle().eval_count() - evals_before;
  return result;
}

GreedyResult fit_greedy_anchor(AnchorRun& run, int steps_per_side) {
  const Box& space = run.space().bounds;
  const Point& anchor = run.space().anchor;
  const std::size_t dim = space.dim();
  const FeatureSet all = FeatureSet::full(dim);
  const std::uint64_t evals_before = run.oracle().eval_count();

  // Initial box: +-1e-3 of the per-dimension width around the anchor.
  GreedyResult result;
  result.box.lower.resize(dim);
  result.box.upper.resize(dim);
  std::vector<double> h0(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    h0[d] = std::max(1e-3 * space.width(d), 0.0);
    result.box.lower[d] = std::max(space.lower[d], anchor[d] - h0[d]);
    result.box.upper[d] = std::min(space.upper[d], anchor[d] + h0[d]);
  }

  Rng rng = run.derive_rng("greedy");
  auto box_sampler = [](const Box& b) {
    return [&b](Rng& g) {
      Point x(b.dim());
      for (std::size_t d = 0; d < b.dim(); ++d) {
        x[d] = g.uniform(b.lower[d], b.upper[d]);
      }
      return x;
    };
  };

  if (!run_region_test(box_sampler(result.box), run.oracle(), run.scheduler(),
                       rng)) {
    result.log10_volume = log10_volume(result.box, all);
    result.evals = run.oracle().eval_count() - evals_before;
    return result;  // flagged uncertified
  }
  result.certified = true;

  struct SideState {
    int next_step = 1;  // step 0 is the initial half-extent
    bool frozen = false;
  };
  std::vector<SideState> sides(2 * dim);
  // Half-extent at step s interpolates h0 -> full width on a log grid, so the
  // final step always reaches the space bound.
  auto extent_at = [&](std::size_t d, int s) {
    if (h0[d] <= 0.0) return 0.0;
    const double ratio = space.width(d) / h0[d];
    return h0[d] * std::pow(ratio, static_cast<double>(s) /
                                       std::max(1, steps_per_side - 1));
  };

  bool any_open = true;
  while (any_open) {
    any_open = false;
    for (std::size_t side = 0; side < sides.size(); ++side) {
      SideState& st = sides[side];
      if (st.frozen) continue;
      const std::size_t d = side / 2;
      const bool high = (side % 2) == 1;

      // Advance to the first step that actually moves this side.
      double candidate = 0.0;
      bool found = false;
      while (st.next_step < steps_per_side) {
        const double h = extent_at(d, st.next_step);
        ++st.next_step;
        const double value =
            high ? std::min(space.upper[d], anchor[d] + h)
                 : std::max(space.lower[d], anchor[d] - h);
        if (high ? value > result.box.upper[d] : value < result.box.lower[d]) {
          candidate = value;
          found = true;
          break;
        }
      }
      if (!found) {
        st.frozen = true;
        continue;
      }

      Box proposal = result.box;
      (high ? proposal.upper[d] : proposal.lower[d]) = candidate;
      if (run_region_test(box_sampler(proposal), run.oracle(),
                          run.scheduler(), rng)) {
        result.box = proposal;
        any_open = true;
      } else {
        st.frozen = true;
      }
    }
  }

  result.log10_volume = log10_volume(result.box, all);
  result.evals = run.oracle().eval_count() - evals_before;
  return result;
}

}  // namespace anchorbox
