#include "anchorbox/data.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <stdexcept>

#include "doctest.h"

using namespace anchorbox;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = "/tmp/anchorbox_test_" + std::to_string(getpid()) + "_" +
           std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv parses, binarizes, and standardizes") {
  const TempCsv csv("a,b,target\n1.0,5.0,1.0\n2.0,6.0,2.0\n3.0,4.0,3.0\n");
  const Dataset d = load_csv(csv.path, "target", /*binarize_median=*/true);
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
  // median 2.0, >= convention: classes (0, 1, 1)
  CHECK(d.labels == std::vector<int>{0, 1, 1});
  CHECK(d.n_classes == 2);

  // standardized: mean 0, std 1 (tested to 1e-9 on the loaded split)
  for (std::size_t c = 0; c < d.dim(); ++c) {
    double mean = 0.0, var = 0.0;
    for (const Point& row : d.rows) mean += row[c];
    mean /= d.size();
    for (const Point& row : d.rows) var += (row[c] - mean) * (row[c] - mean);
    var /= d.size();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
}

TEST_CASE("load_csv integer labels without binarization") {
  const TempCsv csv("x,y,label\n0.1,1.0,3\n0.2,2.0,5\n0.3,3.0,3\n");
  const Dataset d = load_csv(csv.path, "label", false);
  CHECK(d.labels == std::vector<int>{0, 1, 0});  // re-indexed
  CHECK(d.n_classes == 2);
}

TEST_CASE("load_csv error reporting") {
  const TempCsv bad_cell("a,b\n1.0,oops\n");
  try {
    load_csv(bad_cell.path, "b", true);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("'b'") != std::string::npos);
  }

  const TempCsv ragged("a,b\n1.0,2.0\n3.0\n");
  CHECK_THROWS_WITH_AS(load_csv(ragged.path, "b", true),
                       doctest::Contains("ragged row 3"), std::runtime_error);

  const TempCsv fine("a,b\n1.0,2.0\n2.0,3.0\n");
  CHECK_THROWS_WITH_AS(load_csv(fine.path, "missing", true),
                       doctest::Contains("missing"), std::runtime_error);

  const TempCsv constant("a,b\n1.0,1.0\n2.0,1.0\n3.0,1.0\n");
  CHECK_THROWS_WITH_AS(load_csv(constant.path, "a", true),
                       doctest::Contains("constant"), std::runtime_error);
}

TEST_CASE("standardize-destandardize is the identity") {
  const TempCsv csv("a,b,y\n10.5,-3.0,0\n11.5,2.5,1\n14.0,0.5,0\n9.0,1.0,1\n");
  const Dataset d = load_csv(csv.path, "y", false);
  const std::vector<Point> raw{{10.5, -3.0}, {11.5, 2.5}, {14.0, 0.5},
                               {9.0, 1.0}};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point back = d.destandardize(d.rows[i]);
    for (std::size_t c = 0; c < d.dim(); ++c) {
      CHECK(back[c] == doctest::Approx(raw[i][c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("data_bounding_box") {
  Dataset d;
  d.rows = {{0.0, 1.0}, {2.0, -1.0}};
  d.feature_names = {"a", "b"};
  const Box box = data_bounding_box(d);
  CHECK(box.lower == Point{0.0, -1.0});
  CHECK(box.upper == Point{2.0, 1.0});

  Dataset single;
  single.rows = {{3.0, 4.0}};
  single.feature_names = {"a", "b"};
  const Box deg = data_bounding_box(single);
  CHECK(deg.lower == deg.upper);
}

TEST_CASE("split_train_test is seeded and exhaustive") {
  Dataset d;
  d.feature_names = {"a"};
  for (int i = 0; i < 10; ++i) {
    d.rows.push_back({static_cast<double>(i)});
    d.labels.push_back(i % 2);
  }
  d.n_classes = 2;
  Rng r1(5), r2(5);
  const auto [train1, test1] = split_train_test(d, 0.2, r1);
  const auto [train2, test2] = split_train_test(d, 0.2, r2);
  CHECK(train1.size() == 8);
  CHECK(test1.size() == 2);
  CHECK(train1.rows == train2.rows);
  CHECK(test1.rows == test2.rows);
}

TEST_CASE("generate_clusters matches its spec and seed") {
  Rng rng(77);
  const ClusterData cd = generate_clusters(ClusterSpec{}, 2, rng);
  CHECK(cd.dataset.size() == 500);
  CHECK(cd.dataset.n_classes == 5);
  CHECK(cd.means.size() == 5);
  for (int k = 0; k < 5; ++k) {
    std::size_t count = 0;
    for (const int a : cd.assignments) count += a == k;
    CHECK(count == 100);
  }
  for (const Point& sd : cd.stds) {
    for (const double s : sd) {
      CHECK(s >= 0.3);
      CHECK(s <= 1.0);
    }
  }

  // byte-identical regeneration
  Rng rng2(77);
  const ClusterData again = generate_clusters(ClusterSpec{}, 2, rng2);
  CHECK(cd.dataset.rows == again.dataset.rows);

  // per-cluster sample means close to the generating means
  for (std::size_t k = 0; k < 5; ++k) {
    Point mean(2, 0.0);
    for (std::size_t i = 0; i < cd.dataset.size(); ++i) {
      if (cd.assignments[i] != static_cast<int>(k)) continue;
      for (std::size_t c = 0; c < 2; ++c) mean[c] += cd.dataset.rows[i][c];
    }
    for (std::size_t c = 0; c < 2; ++c) {
      mean[c] /= 100.0;
      const double tolerance = 3.0 * cd.stds[k][c] / std::sqrt(100.0);
      CHECK(std::abs(mean[c] - cd.means[k][c]) <= tolerance);
    }
  }
}

TEST_CASE("cluster_coverage") {
  Rng rng(78);
  const ClusterData cd = generate_clusters(ClusterSpec{}, 2, rng);
  const Box bbox = data_bounding_box(cd.dataset);
  CHECK(cluster_coverage(bbox, cd.dataset.rows, cd.assignments, 0) ==
        doctest::Approx(1.0));

  // degenerate box at a member of cluster 3
  std::size_t member = 0;
  while (cd.assignments[member] != 3) ++member;
  const Box degenerate = Box::degenerate_at(cd.dataset.rows[member]);
  CHECK(cluster_coverage(degenerate, cd.dataset.rows, cd.assignments, 3) ==
        doctest::Approx(0.01));
  CHECK(cluster_coverage(degenerate, cd.dataset.rows, cd.assignments, 2) ==
        doctest::Approx(0.0));

  CHECK_THROWS_AS(
      cluster_coverage(bbox, cd.dataset.rows, cd.assignments, 99),
      std::invalid_argument);
}
