#include "anchorbox/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace anchorbox {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? ""
                                           : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row_1based,
                  const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw std::runtime_error("non-numeric cell at row " +
                             std::to_string(row_1based) + ", column '" +
                             column + "': '" + cell + "'");
  }
  return value;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawCsv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  RawCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  csv.header = split_line(line);
  if (csv.header.empty()) throw std::runtime_error("empty header row");

  std::size_t row_no = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != csv.header.size()) {
      throw std::runtime_error(
          "ragged row " + std::to_string(row_no) + ": expected " +
          std::to_string(csv.header.size()) + " cells, found " +
          std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row[c] = parse_cell(cells[c], row_no, csv.header[c]);
    }
    csv.rows.push_back(std::move(row));
  }
  if (csv.rows.empty()) throw std::runtime_error("CSV has no data rows");
  return csv;
}

void standardize_in_place(Dataset& d) {
  const std::size_t dim = d.dim();
  const double n = static_cast<double>(d.size());
  d.mean.assign(dim, 0.0);
  d.stdev.assign(dim, 0.0);
  for (const Point& row : d.rows) {
    for (std::size_t c = 0; c < dim; ++c) d.mean[c] += row[c];
  }
  for (double& m : d.mean) m /= n;
  for (const Point& row : d.rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double delta = row[c] - d.mean[c];
      d.stdev[c] += delta * delta;
    }
  }
  for (std::size_t c = 0; c < dim; ++c) {
    d.stdev[c] = std::sqrt(d.stdev[c] / n);
    if (d.stdev[c] == 0.0) {
      throw std::runtime_error("feature '" + d.feature_names[c] +
                               "' is constant; remove the column");
    }
  }
  for (Point& row : d.rows) {
    for (std::size_t c = 0; c < dim; ++c) {
      row[c] = (row[c] - d.mean[c]) / d.stdev[c];
    }
  }
}

}  // namespace

Point Dataset::destandardize(const Point& x) const {
  Point out = x;
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = out[c] * stdev[c] + mean[c];
  }
  return out;
}

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool binarize_median) {
  const RawCsv csv = read_csv(path);
  const auto label_it =
      std::find(csv.header.begin(), csv.header.end(), label_column);
  if (label_it == csv.header.end()) {
    throw CsvSchemaError("label column '" + label_column +
                         "' not found in header");
  }
  const std::size_t label_idx =
      static_cast<std::size_t>(label_it - csv.header.begin());

  Dataset d;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c != label_idx) d.feature_names.push_back(csv.header[c]);
  }
  std::vector<double> raw_labels;
  for (const auto& row : csv.rows) {
    Point features;
    features.reserve(d.dim());
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != label_idx) features.push_back(row[c]);
    }
    d.rows.push_back(std::move(features));
    raw_labels.push_back(row[label_idx]);
  }

  if (binarize_median) {
    std::vector<double> sorted = raw_labels;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 == 1
                              ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    for (const double y : raw_labels) {
      d.labels.push_back(y >= median ? 1 : 0);
    }
    d.n_classes = 2;
  } else {
    std::vector<double> unique = raw_labels;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (const double y : raw_labels) {
      if (std::abs(y - std::round(y)) > 1e-9) {
        throw std::runtime_error(
            "labels are not integers; pass binarize_median for real-valued "
            "targets");
      }
      const auto it = std::lower_bound(unique.begin(), unique.end(), y);
      d.labels.push_back(static_cast<int>(it - unique.begin()));
    }
    d.n_classes = unique.size();
  }

  standardize_in_place(d);
  return d;
}

Dataset load_csv_features(const std::string& path) {
  const RawCsv csv = read_csv(path);
  Dataset d;
  d.feature_names = csv.header;
  for (const auto& row : csv.rows) d.rows.push_back(row);
  d.mean.assign(d.dim(), 0.0);
  d.stdev.assign(d.dim(), 1.0);
  return d;
}

Box data_bounding_box(const Dataset& d) {
  if (d.rows.empty()) throw std::invalid_argument("empty dataset");
  Box box{d.rows.front(), d.rows.front()};
  for (const Point& row : d.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      box.lower[c] = std::min(box.lower[c], row[c]);
      box.upper[c] = std::max(box.upper[c], row[c]);
    }
  }
  return box;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& d,
                                             double test_fraction, Rng& rng) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  const std::size_t n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::round(test_fraction * d.size())));

  auto make_subset = [&](std::size_t from, std::size_t to) {
    Dataset out;
    out.feature_names = d.feature_names;
    out.mean = d.mean;
    out.stdev = d.stdev;
    out.n_classes = d.n_classes;
    for (std::size_t i = from; i < to; ++i) {
      out.rows.push_back(d.rows[order[i]]);
      if (!d.labels.empty()) out.labels.push_back(d.labels[order[i]]);
    }
    return out;
  };
  return {make_subset(n_test, d.size()), make_subset(0, n_test)};
}

ClusterData generate_clusters(const ClusterSpec& spec, std::size_t dim,
                              Rng& rng) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  ClusterData out;
  out.dataset.n_classes = spec.n_clusters;
  for (std::size_t c = 0; c < dim; ++c) {
    out.dataset.feature_names.push_back("x" + std::to_string(c));
  }
  out.dataset.mean.assign(dim, 0.0);
  out.dataset.stdev.assign(dim, 1.0);

  for (std::size_t k = 0; k < spec.n_clusters; ++k) {
    Point mean(dim), sd(dim);
    for (std::size_t c = 0; c < dim; ++c) mean[c] = rng.normal();
    for (std::size_t c = 0; c < dim; ++c) {
      sd[c] = rng.uniform(spec.std_min, spec.std_max);
    }
    for (std::size_t i = 0; i < spec.cluster_size; ++i) {
      Point x(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        x[c] = rng.normal(mean[c], sd[c]);
      }
      out.dataset.rows.push_back(std::move(x));
      out.dataset.labels.push_back(static_cast<int>(k));
      out.assignments.push_back(static_cast<int>(k));
    }
    out.means.push_back(std::move(mean));
    out.stds.push_back(std::move(sd));
  }
  return out;
}

double cluster_coverage(const Box& box, const std::vector<Point>& rows,
                        const std::vector<int>& assignments,
                        int anchor_cluster) {
  std::size_t total = 0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (assignments[i] != anchor_cluster) continue;
    ++total;
    inside += contains(box, rows[i]);
  }
  if (total == 0) throw std::invalid_argument("anchor cluster is empty");
  return static_cast<double>(inside) / static_cast<double>(total);
}

}  // namespace anchorbox
