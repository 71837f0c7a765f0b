#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "anchorbox/rng.hpp"

namespace anchorbox {

using Point = std::vector<double>;

// Scalar-valued and class-probability-valued predictors.
using ValueFn = std::function<double(const Point&)>;
using ProbFn = std::function<std::vector<double>(const Point&)>;

// Axis-aligned box given by per-dimension closed intervals [lower, upper].
// Degenerate sides (lower == upper) are legal and arise for pinned dimensions.
struct Box {
  Point lower;
  Point upper;

  std::size_t dim() const { return lower.size(); }
  double width(std::size_t d) const { return upper[d] - lower[d]; }

  static Box degenerate_at(const Point& x) { return Box{x, x}; }
};

// Throws std::invalid_argument if bounds are inverted, non-finite, or of
// mismatched length.
void validate_box(const Box& box);

// Ordered subset of feature indices that are currently allowed to vary.
// Order is stable: prefix(i) is the first i indices in insertion order.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::vector<std::size_t> indices);  // rejects duplicates

  static FeatureSet full(std::size_t dim);
  static FeatureSet single(std::size_t d) { return FeatureSet({d}); }

  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  std::size_t operator[](std::size_t i) const { return idx_[i]; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }
  const std::vector<std::size_t>& indices() const { return idx_; }

  bool contains(std::size_t d) const;
  FeatureSet prefix(std::size_t n) const;
  std::string to_string() const;

 private:
  std::vector<std::size_t> idx_;
};

// Concatenates two disjoint sets, preserving order; throws on overlap.
FeatureSet join(const FeatureSet& a, const FeatureSet& b);

// Closed membership across all dimensions; throws on dimension mismatch.
bool contains(const Box& box, const Point& x);

// Sum of log10 side widths over the active dimensions. Volumes are kept in
// log10 space throughout; a zero-width active side yields -infinity rather
// than an error.
double log10_volume(const Box& box, const FeatureSet& active);

// Componentwise max of lowers / min of uppers. Throws std::logic_error when
// the result would be empty: callers only intersect boxes that share the
// anchor point, so emptiness signals a bug.
Box intersect(const Box& a, const Box& b);

// Random partition into halves whose sizes differ by at most one. When |s| is
// odd the second half carries the extra feature. Requires |s| >= 2.
std::pair<FeatureSet, FeatureSet> balanced_random_split(const FeatureSet& s,
                                                        Rng& rng);

// Global bounds plus the anchor point they must contain.
struct SearchSpace {
  Box bounds;
  Point anchor;
};

// Validates containment and box invariants.
SearchSpace make_search_space(Box bounds, Point anchor);

}  // namespace anchorbox
