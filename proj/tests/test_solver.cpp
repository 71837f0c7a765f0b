#include "anchorbox/solver.hpp"

#include <cmath>

#include <stdexcept>

#include "doctest.h"

using namespace anchorbox;

namespace {

// Recomputed from scratch: partial sum to 10^6 plus the integral tail bound
// 1/ln(10^6), summed smallest-first for accuracy.
double recompute_tail_constant() {
  double sum = 0.0;
  for (int j = 1'000'000; j >= 1; --j) {
    const double lg = std::log(j + 1.0);
    sum += 1.0 / (j * lg * lg);
  }
  return sum + 1.0 / std::log(1e6);
}

}  // namespace

TEST_CASE("schedule tail constant matches its derivation") {
  CHECK(kScheduleTailConstant ==
        doctest::Approx(recompute_tail_constant()).epsilon(1e-12));
}

TEST_CASE("next_test: first issued test at delta=0.01, rho=0.99") {
  TestScheduler sched(0.01, 0.99);
  const auto t1 = sched.next_test();
  // Independent evaluation of the schedule at i = 1.
  const double log2 = std::log(2.0);
  const double expected_delta1 =
      0.01 / (1.0 * log2 * log2 * recompute_tail_constant());
  CHECK(t1.significance == doctest::Approx(expected_delta1).epsilon(1e-12));
  CHECK(t1.significance == doctest::Approx(6.1438e-3).epsilon(1e-4));
  const std::int64_t expected_m = static_cast<std::int64_t>(
      std::ceil(std::log(expected_delta1) / std::log(0.99)));
  CHECK(t1.samples == expected_m);
  CHECK(t1.samples == 507);

  // With delta_i = 0.01 directly, M = ceil(ln 0.01 / ln 0.99) = 459.
  CHECK(static_cast<std::int64_t>(
            std::ceil(std::log(0.01) / std::log(0.99))) == 459);

  const auto t2 = sched.next_test();
  CHECK(t2.significance < t1.significance);  // schedule decreasing
  CHECK(sched.tests_issued() == 2);
}

TEST_CASE("scheduler budget stays below delta") {
  TestScheduler sched(0.05, 0.9);
  double spent = 0.0;
  for (int i = 0; i < 20000; ++i) {
    spent += sched.next_test().significance;
  }
  CHECK(spent == doctest::Approx(sched.delta_spent()));
  CHECK(spent < 0.05);
  CHECK_THROWS_AS(TestScheduler(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(TestScheduler(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("certify_box: constant oracles") {
  const Box box{{0.0, 0.0}, {1.0, 1.0}};
  const FeatureSet active = FeatureSet::full(2);
  const Point anchor{0.5, 0.5};
  Rng rng(5);

  FunctionOracle always([](const Point&) { return 1; });
  TestScheduler sched(0.01, 0.99);
  const CertifyResult pass =
      certify_box(box, active, anchor, always, sched, rng);
  CHECK(pass.passed);
  CHECK(pass.counterexamples.empty());
  CHECK(static_cast<std::int64_t>(always.eval_count()) == pass.samples);

  FunctionOracle never([](const Point&) { return 0; });
  TestScheduler sched2(0.01, 0.99);
  const CertifyResult fail =
      certify_box(box, active, anchor, never, sched2, rng);
  CHECK_FALSE(fail.passed);
  CHECK(static_cast<std::int64_t>(fail.counterexamples.size()) ==
        fail.samples);
}

TEST_CASE("certify_box pins inactive dimensions to the anchor") {
  const Box box{{0.0, 0.0}, {1.0, 1.0}};
  const FeatureSet active({0});
  const Point anchor{0.5, 0.25};
  Rng rng(6);
  FunctionOracle check([](const Point& x) { return x[1] == 0.25 ? 1 : 0; });
  TestScheduler sched(0.01, 0.99);
  CHECK(certify_box(box, active, anchor, check, sched, rng).passed);
}

TEST_CASE("certify_box passes on the analytic optimum of the half-L1 ball") {
  // At rho = 1 the optimal box on [-5,5]^10 keeps the constrained half at
  // width 1 and the free half at full width; its interior is entirely
  // faithful, so the test must always pass.
  const std::size_t dim = 10;
  Box box{Point(dim, -5.0), Point(dim, 5.0)};
  for (std::size_t d = 0; d < dim / 2; ++d) {
    box.lower[d] = -0.5;
    box.upper[d] = 0.5;
  }
  HalfL1BallOracle oracle(dim);
  TestScheduler sched(0.01, 0.99);
  Rng rng(7);
  for (int i = 0; i < 5; ++i) {
    CHECK(certify_box(box, FeatureSet::full(dim), Point(dim, 0.0), oracle,
                      sched, rng)
              .passed);
  }
}

TEST_CASE("solve_restricted: 1-D interval oracle") {
  // e(x) = 1 iff |x| < 0.5 on [-5, 5]; the solved interval must straddle
  // [-0.5, 0.5] closely and have true purity >= rho in nearly every run.
  int pure_runs = 0;
  const int runs = 40;
  for (int run = 0; run < runs; ++run) {
    FunctionOracle oracle(
        [](const Point& x) { return std::abs(x[0]) < 0.5 ? 1 : 0; });
    TestScheduler sched(0.01, 0.99);
    SampleStore store;
    SolverStreams streams{Rng(1000 + run).derive("s"),
                          Rng(1000 + run).derive("t"),
                          Rng(1000 + run).derive("e")};
    SolveParams params;
    params.n_positives = 10;
    params.node_budget = kUnlimitedNodes;

    const Box space{{-5.0}, {5.0}};
    const Box out = solve_restricted(FeatureSet::full(1), space, {0.0},
                                     oracle, params, sched, store, streams);
    REQUIRE(out.lower[0] <= 0.0);
    REQUIRE(out.upper[0] >= 0.0);
    CHECK(out.lower[0] >= -0.75);
    CHECK(out.upper[0] <= 0.75);
    CHECK(out.upper[0] >= 0.25);
    CHECK(out.lower[0] <= -0.25);
    // Analytic purity of the returned interval.
    const double width = out.upper[0] - out.lower[0];
    const double faithful = std::min(out.upper[0], 0.5) -
                            std::max(out.lower[0], -0.5);
    pure_runs += faithful / width >= 0.99;
  }
  CHECK(pure_runs >= runs - 1);  // delta = 0.01 failures are rare
}

TEST_CASE("solve_restricted: constant-1 oracle returns the full space") {
  FunctionOracle oracle([](const Point&) { return 1; });
  TestScheduler sched(0.01, 0.99);
  SampleStore store;
  SolverStreams streams{Rng(1).derive("s"), Rng(1).derive("t"),
                        Rng(1).derive("e")};
  SolveParams params;
  params.n_positives = 5;

  const Box space{{-1.0, 2.0}, {1.0, 3.0}};
  const Box out = solve_restricted(FeatureSet::full(2), space, {0.0, 2.5},
                                   oracle, params, sched, store, streams);
  CHECK(out.lower == space.lower);
  CHECK(out.upper == space.upper);
  CHECK(sched.tests_issued() == 1);
}

TEST_CASE("solve_restricted: single active feature leaves others unchanged") {
  FunctionOracle oracle([](const Point&) { return 1; });
  TestScheduler sched(0.01, 0.99);
  SampleStore store;
  SolverStreams streams{Rng(2).derive("s"), Rng(2).derive("t"),
                        Rng(2).derive("e")};
  SolveParams params;
  params.n_positives = 5;

  const Box space{{-1.0, -2.0, -3.0}, {1.0, 2.0, 3.0}};
  const FeatureSet active({1});
  const Box out = solve_restricted(active, space, {0.0, 0.0, 0.0}, oracle,
                                   params, sched, store, streams);
  CHECK(out.lower[0] == -1.0);
  CHECK(out.upper[0] == 1.0);
  CHECK(out.lower[2] == -3.0);
  CHECK(out.upper[2] == 3.0);
}

TEST_CASE("solve_restricted raises positives-too-rare under a tight cap") {
  FunctionOracle oracle([](const Point&) { return 0; });
  // the anchor is the only faithful point; nothing sampled will be positive
  TestScheduler sched(0.01, 0.99);
  SampleStore store;
  SolverStreams streams{Rng(3).derive("s"), Rng(3).derive("t"),
                        Rng(3).derive("e")};
  SolveParams params;
  params.n_positives = 10;
  params.sample_cap = 200;

  const Box space{{-1.0}, {1.0}};
  CHECK_THROWS_AS(solve_restricted(FeatureSet::full(1), space, {0.0}, oracle,
                                   params, sched, store, streams),
                  PositivesTooRareError);
}

TEST_CASE("sample reuse reduces fresh oracle calls") {
  auto make_oracle = [] {
    return FunctionOracle(
        [](const Point& x) { return std::abs(x[0]) < 2.0 ? 1 : 0; });
  };
  const Box space{{-5.0}, {5.0}};
  const FeatureSet active = FeatureSet::full(1);

  std::uint64_t evals_reuse = 0;
  std::uint64_t evals_strict = 0;
  for (const bool reuse : {true, false}) {
    FunctionOracle oracle = make_oracle();
    TestScheduler sched(0.01, 0.99);
    SampleStore store;
    SolverStreams streams{Rng(11).derive("s"), Rng(11).derive("t"),
                          Rng(11).derive("e")};
    SolveParams params;
    params.n_positives = 50;
    params.reuse_samples = reuse;
    for (int call = 0; call < 3; ++call) {
      solve_restricted(active, space, {0.0}, oracle, params, sched, store,
                       streams);
    }
    (reuse ? evals_reuse : evals_strict) = oracle.eval_count();
  }
  CHECK(evals_reuse < evals_strict);
}
