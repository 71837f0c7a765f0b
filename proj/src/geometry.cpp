#include "anchorbox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace anchorbox {

void validate_box(const Box& box) {
  if (box.lower.size() != box.upper.size()) {
    throw std::invalid_argument("box bound vectors have different lengths");
  }
  for (std::size_t d = 0; d < box.dim(); ++d) {
    if (!std::isfinite(box.lower[d]) || !std::isfinite(box.upper[d])) {
      throw std::invalid_argument("box bounds must be finite (dim " +
                                  std::to_string(d) + ")");
    }
    if (box.lower[d] > box.upper[d]) {
      throw std::invalid_argument("box lower exceeds upper at dim " +
                                  std::to_string(d));
    }
  }
}

FeatureSet::FeatureSet(std::vector<std::size_t> indices)
    : idx_(std::move(indices)) {
  std::unordered_set<std::size_t> seen;
  for (const std::size_t d : idx_) {
    if (!seen.insert(d).second) {
      throw std::invalid_argument("duplicate feature index " +
                                  std::to_string(d));
    }
  }
}

FeatureSet FeatureSet::full(std::size_t dim) {
  std::vector<std::size_t> idx(dim);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return FeatureSet(std::move(idx));
}

bool FeatureSet::contains(std::size_t d) const {
  return std::find(idx_.begin(), idx_.end(), d) != idx_.end();
}

FeatureSet FeatureSet::prefix(std::size_t n) const {
  if (n > idx_.size()) {
    throw std::invalid_argument("prefix length exceeds set size");
  }
  return FeatureSet(
      std::vector<std::size_t>(idx_.begin(), idx_.begin() + n));
}

std::string FeatureSet::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < idx_.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(idx_[i]);
  }
  return out + "}";
}

FeatureSet join(const FeatureSet& a, const FeatureSet& b) {
  std::vector<std::size_t> idx(a.begin(), a.end());
  idx.insert(idx.end(), b.begin(), b.end());
  return FeatureSet(std::move(idx));  // ctor rejects overlap
}

bool contains(const Box& box, const Point& x) {
  if (box.dim() != x.size()) {
    throw std::invalid_argument("point/box dimension mismatch");
  }
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] < box.lower[d] || x[d] > box.upper[d]) return false;
  }
  return true;
}

double log10_volume(const Box& box, const FeatureSet& active) {
  double sum = 0.0;
  for (const std::size_t d : active) {
    const double w = box.width(d);
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    sum += std::log10(w);
  }
  return sum;
}

Box intersect(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("box dimension mismatch in intersect");
  }
  Box out;
  out.lower.resize(a.dim());
  out.upper.resize(a.dim());
  for (std::size_t d = 0; d < a.dim(); ++d) {
    out.lower[d] = std::max(a.lower[d], b.lower[d]);
    out.upper[d] = std::min(a.upper[d], b.upper[d]);
    if (out.lower[d] > out.upper[d]) {
      throw std::logic_error("empty box intersection at dim " +
                             std::to_string(d));
    }
  }
  return out;
}

std::pair<FeatureSet, FeatureSet> balanced_random_split(const FeatureSet& s,
                                                        Rng& rng) {
  if (s.size() < 2) {
    throw std::invalid_argument("cannot split a feature set of size " +
                                std::to_string(s.size()));
  }
  std::vector<std::size_t> idx = s.indices();
  shuffle(idx, rng);
  const std::size_t first_size = idx.size() / 2;  // extra element to second
  return {FeatureSet(std::vector<std::size_t>(idx.begin(),
                                              idx.begin() + first_size)),
          FeatureSet(std::vector<std::size_t>(idx.begin() + first_size,
                                              idx.end()))};
}

SearchSpace make_search_space(Box bounds, Point anchor) {
  validate_box(bounds);
  if (!contains(bounds, anchor)) {
    throw std::invalid_argument("anchor lies outside the search bounds");
  }
  return SearchSpace{std::move(bounds), std::move(anchor)};
}

}  // namespace anchorbox
