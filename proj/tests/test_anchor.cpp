#include "anchorbox/anchor.hpp"

#include <cmath>

#include <stdexcept>

#include "doctest.h"

using namespace anchorbox;

namespace {

AnchorParams quick_params(std::uint64_t seed, std::int64_t n = 20,
                          std::int64_t t = 50) {
  AnchorParams p;
  p.n_positives = n;
  p.node_budget = t;
  p.audit_samples = 2000;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("D=1 base case solves the interval oracle") {
  auto oracle = std::make_shared<FunctionOracle>(
      [](const Point& x) { return std::abs(x[0]) < 0.5 ? 1 : 0; });
  AnchorRun run(make_search_space(Box{{-5.0}, {5.0}}, {0.0}), oracle,
                quick_params(1));
  const GuaranteeReport report = run.run_to_report();
  CHECK(report.box.lower[0] <= -0.25);
  CHECK(report.box.upper[0] >= 0.25);
  CHECK(report.box.lower[0] >= -0.75);
  CHECK(report.box.upper[0] <= 0.75);
  CHECK(report.purity_audit.fraction >= 0.98);
  CHECK(report.per_feature_widths[0] ==
        doctest::Approx(report.box.upper[0] - report.box.lower[0]));
}

TEST_CASE("constant-1 oracle returns the full bounding box") {
  auto oracle = std::make_shared<FunctionOracle>([](const Point&) { return 1; });
  const Box space{{-1.0, 2.0}, {3.0, 6.0}};
  AnchorRun run(make_search_space(space, {0.0, 3.0}), oracle, quick_params(2));
  const GuaranteeReport report = run.run_to_report();
  CHECK(report.box.lower == space.lower);
  CHECK(report.box.upper == space.upper);
  CHECK(report.log10_volume ==
        doctest::Approx(std::log10(4.0) + std::log10(4.0)));
  CHECK(report.purity_audit.fraction == doctest::Approx(1.0));
}

TEST_CASE("identical seeds give identical reports") {
  auto make_report = [](std::uint64_t seed) {
    auto oracle = std::make_shared<FunctionOracle>([](const Point& x) {
      return std::abs(x[0]) + std::abs(x[1]) < 1.0 ? 1 : 0;
    });
    AnchorRun run(make_search_space(Box{{-3.0, -3.0}, {3.0, 3.0}},
                                    {0.0, 0.0}),
                  oracle, quick_params(seed));
    return run.run_to_report();
  };
  const GuaranteeReport a = make_report(42);
  const GuaranteeReport b = make_report(42);
  CHECK(a.box.lower == b.box.lower);
  CHECK(a.box.upper == b.box.upper);
  CHECK(a.evals == b.evals);
  CHECK(a.tests_issued == b.tests_issued);
  CHECK(a.purity_audit.fraction == b.purity_audit.fraction);

  const GuaranteeReport c = make_report(43);
  CHECK((c.box.lower != a.box.lower || c.box.upper != a.box.upper));
}

TEST_CASE("oracle accounting: evals exclude the audit exactly") {
  auto oracle = std::make_shared<FunctionOracle>(
      [](const Point& x) { return std::abs(x[0]) < 2.0 ? 1 : 0; });
  AnchorParams params = quick_params(7);
  params.audit_samples = 1234;
  AnchorRun run(make_search_space(Box{{-5.0}, {5.0}}, {0.0}), oracle, params);
  const GuaranteeReport report = run.run_to_report();
  CHECK(oracle->eval_count() == report.evals + 1234);
  CHECK(report.tests_issued == run.scheduler().tests_issued());
}

TEST_CASE("unfaithful anchor is certification-impossible") {
  auto oracle = std::make_shared<FunctionOracle>([](const Point&) { return 0; });
  CHECK_THROWS_AS(AnchorRun(make_search_space(Box{{0.0}, {1.0}}, {0.5}),
                            oracle, quick_params(3)),
                  CertificationImpossibleError);
}

TEST_CASE("parameter validation") {
  auto oracle = std::make_shared<FunctionOracle>([](const Point&) { return 1; });
  AnchorParams p = quick_params(4);
  p.rho = 1.0;
  CHECK_THROWS_AS(AnchorRun(make_search_space(Box{{0.0}, {1.0}}, {0.5}),
                            oracle, p),
                  std::invalid_argument);
  p = quick_params(4);
  p.node_budget = 0;
  CHECK_THROWS_AS(AnchorRun(make_search_space(Box{{0.0}, {1.0}}, {0.5}),
                            oracle, p),
                  std::invalid_argument);
}

TEST_CASE("budget soundness and box sanity on a linear oracle") {
  // e(x) = 1 iff w.x < 1, a nested (linear) indicator in D = 4.
  const Point w{1.0, 2.0, -1.0, 0.5};
  auto oracle = std::make_shared<FunctionOracle>([w](const Point& x) {
    double s = 0.0;
    for (std::size_t d = 0; d < w.size(); ++d) s += w[d] * x[d];
    return s < 1.0 ? 1 : 0;
  });
  const Box space{Point(4, -5.0), Point(4, 5.0)};
  AnchorRun run(make_search_space(space, Point(4, 0.0)), oracle,
                quick_params(11, 30, 50));
  const GuaranteeReport report = run.run_to_report();

  CHECK(report.delta_spent <= run.params().delta + 1e-12);
  CHECK(contains(report.box, Point(4, 0.0)));
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(report.box.lower[d] >= space.lower[d]);
    CHECK(report.box.upper[d] <= space.upper[d]);
  }

  // The final box never leaves the base-case interval of any single feature.
  const auto& base = run.base_case_bounds();
  for (std::size_t d = 0; d < 4; ++d) {
    REQUIRE(base[d].has_value());
    CHECK(report.box.lower[d] >= (*base[d])[0] - 1e-12);
    CHECK(report.box.upper[d] <= (*base[d])[1] + 1e-12);
  }
  CHECK(report.purity_audit.fraction >= 0.98);
}

TEST_CASE("degenerate 1-row space still certifies") {
  auto oracle = std::make_shared<FunctionOracle>([](const Point&) { return 1; });
  const Box space{{1.5, -2.0}, {1.5, -2.0}};
  AnchorRun run(make_search_space(space, {1.5, -2.0}), oracle,
                quick_params(5, 5, 10));
  const GuaranteeReport report = run.run_to_report();
  CHECK(report.box.lower == space.lower);
  CHECK(report.box.upper == space.upper);
  CHECK(report.log10_volume == -std::numeric_limits<double>::infinity());
}
