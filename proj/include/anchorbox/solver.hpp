#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "anchorbox/geometry.hpp"
#include "anchorbox/maxbox.hpp"
#include "anchorbox/oracle.hpp"
#include "anchorbox/rng.hpp"

namespace anchorbox {

// Upper bound on sum_{j>=1} 1/(j ln^2(j+1)): partial sum to j = 10^6 plus the
// integral tail bound 1/ln(10^6). Using an upper bound keeps the issued
// significance levels conservative, so their sum stays below delta.
inline constexpr double kScheduleTailConstant = 3.3877355352008429;

// Issues the per-test significance levels delta_i = delta / (i ln^2(i+1) C)
// and sample counts M = ceil(ln delta_i / ln rho). The counter is global for
// a whole run and advances on every issued test, including failed ones.
class TestScheduler {
 public:
  TestScheduler(double delta, double rho);

  struct IssuedTest {
    double significance = 0.0;   // delta_i
    std::int64_t samples = 0;    // M
  };

  IssuedTest next_test();

  std::uint64_t tests_issued() const { return counter_ - 1; }
  double delta_spent() const { return spent_; }
  double delta() const { return delta_; }
  double rho() const { return rho_; }

 private:
  double delta_;
  double rho_;
  std::uint64_t counter_ = 1;
  double spent_ = 0.0;
};

// Order-insensitive identifier of an active-dimension set.
std::uint64_t active_signature(const FeatureSet& active);

// Every labeled point a run has paid an oracle call for, kept so later
// restricted solves can reuse them. Negatives are reusable anywhere (they
// only constrain feasibility); positives carry the active set they were
// sampled under, because only a draw over the same dimensions stays uniform
// when restricted to a later, smaller space.
struct SampleStore {
  struct TaggedPoint {
    Point x;
    std::uint64_t active_sig = 0;
  };
  std::vector<TaggedPoint> positives;
  std::vector<Point> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

struct CertifyResult {
  bool passed = false;
  std::vector<Point> counterexamples;     // every sampled negative
  std::vector<Point> positives_sampled;   // the passing samples
  double significance = 0.0;
  std::int64_t samples = 0;
};

// One statistical test: draws (delta_i, M) from the scheduler, samples M
// points uniformly in the box on the active dimensions (pinned to the anchor
// elsewhere), and passes iff every sample is faithful. All M samples are
// evaluated even after a failure so the max-box sees every counterexample.
CertifyResult certify_box(const Box& box, const FeatureSet& active,
                          const Point& anchor, FaithfulnessOracle& oracle,
                          TestScheduler& sched, Rng& rng);

// Thrown when the sampling loop cannot find enough positives within the
// fresh-sample cap; the caller decides whether to shrink the space and retry.
class PositivesTooRareError : public std::runtime_error {
 public:
  explicit PositivesTooRareError(const std::string& what)
      : std::runtime_error(what) {}
};

struct SolveParams {
  std::int64_t n_positives = 100;   // N
  std::int64_t node_budget = 100;   // T
  std::int64_t sample_cap = 100000;
  ExpansionOrder expansion = ExpansionOrder::largest_gain_first;
  // When false, each call starts from empty point sets and keeps only its own
  // counterexamples, matching the stricter by-the-book sampling loop.
  bool reuse_samples = true;
};

struct SolverStreams {
  Rng sampling;
  Rng testing;
  Rng expansion;
};

// Accumulates labeled samples until N positives lie in the current space,
// then alternates max-box proposal and certification until a proposal passes.
// The returned box carries solved bounds on the active dimensions and the
// caller's bounds unchanged elsewhere.
Box solve_restricted(const FeatureSet& active, const Box& space,
                     const Point& anchor, FaithfulnessOracle& oracle,
                     const SolveParams& params, TestScheduler& sched,
                     SampleStore& store, SolverStreams& streams);

}  // namespace anchorbox
