#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anchorbox/geometry.hpp"
#include "anchorbox/rng.hpp"

namespace anchorbox {

// A caller-fixable schema problem (e.g. the named label column does not
// exist), as opposed to malformed file contents.
class CsvSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<Point> rows;  // standardized features
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<double> mean;   // standardization stats, identity when
  std::vector<double> stdev;  // the source is already unitless
  std::size_t n_classes = 0;

  std::size_t dim() const { return feature_names.size(); }
  std::size_t size() const { return rows.size(); }
  Point destandardize(const Point& x) const;
};

// Parses a rectangular numeric CSV with a header row. Real labels are
// binarized at their median when requested (>= median maps to class 1);
// otherwise labels must be small integers. Features are standardized to zero
// mean and unit variance over the file, with the stats recorded. Parse
// problems report the offending row and column; a constant feature column is
// an error instructing its removal.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool binarize_median);

// Same parser without a label column: every column is a feature and labels
// stay empty. Features are left in their original units.
Dataset load_csv_features(const std::string& path);

// Per-feature min/max over the rows.
Box data_bounding_box(const Dataset& d);

// Deterministic row split; the test fraction lands in `second`.
std::pair<Dataset, Dataset> split_train_test(const Dataset& d,
                                             double test_fraction, Rng& rng);

struct ClusterSpec {
  std::size_t n_clusters = 5;
  std::size_t cluster_size = 100;
  double std_min = 0.3;
  double std_max = 1.0;
};

struct ClusterData {
  Dataset dataset;                  // labels are the cluster ids
  std::vector<int> assignments;     // same as labels, kept for clarity
  std::vector<Point> means;         // generating parameters
  std::vector<Point> stds;
};

// Isotropic-diagonal Gaussian clusters: means drawn from N(0,1) per
// coordinate, standard deviations from U(std_min, std_max). Points are kept
// in the generated units.
ClusterData generate_clusters(const ClusterSpec& spec, std::size_t dim,
                              Rng& rng);

// Fraction of the anchor's cluster contained in the box.
double cluster_coverage(const Box& box, const std::vector<Point>& rows,
                        const std::vector<int>& assignments,
                        int anchor_cluster);

}  // namespace anchorbox
