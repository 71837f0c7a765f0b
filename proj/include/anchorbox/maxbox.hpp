#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "anchorbox/geometry.hpp"
#include "anchorbox/rng.hpp"

namespace anchorbox {

enum class ExpansionOrder { largest_gain_first, random };

inline constexpr std::int64_t kUnlimitedNodes =
    std::numeric_limits<std::int64_t>::max();

// One max-box search problem: find a box that contains the anchor and as many
// positive points as possible while keeping every negative point out of its
// interior. Only the active dimensions participate; on inactive dimensions
// every point equals the anchor and the space bounds pass through unchanged.
struct MaxBoxInstance {
  std::span<const Point> positives;
  std::span<const Point> negatives;
  Point anchor;
  Box space;
  FeatureSet active;
  std::int64_t node_budget = kUnlimitedNodes;  // T, in nodes expanded
};

// Best-bound-first branch-and-bound with a node budget, followed by side
// expansion of the incumbent. The returned box contains the anchor, lies in
// the space, and has no negative point strictly inside it.
Box find_max_box(const MaxBoxInstance& inst, ExpansionOrder order, Rng& rng);

// Pushes every side of `box` outward until it meets a negative point or the
// space bound. Sides move one at a time, blockers recomputed against the
// current extents: largest volume gain first, or a seeded random order.
Box expand_box(const Box& box, std::span<const Point> negatives,
               const Box& space, const FeatureSet& active,
               ExpansionOrder order, Rng& rng);

// True when q lies strictly inside the box on every active dimension; points
// touching the boundary do not count (boxes are closed, interiors open).
bool strictly_inside(const Box& box, const Point& q, const FeatureSet& active);

// Closed containment restricted to the active dimensions.
bool inside_on_active(const Box& box, const Point& q,
                      const FeatureSet& active);

}  // namespace anchorbox
