#include "anchorbox/maxbox.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace anchorbox {

bool strictly_inside(const Box& box, const Point& q,
                     const FeatureSet& active) {
  for (const std::size_t d : active) {
    if (!(box.lower[d] < q[d] && q[d] < box.upper[d])) return false;
  }
  return true;
}

bool inside_on_active(const Box& box, const Point& q,
                      const FeatureSet& active) {
  for (const std::size_t d : active) {
    if (q[d] < box.lower[d] || q[d] > box.upper[d]) return false;
  }
  return true;
}

namespace {

int count_inside(const Box& box, std::span<const Point> points,
                 const FeatureSet& active) {
  int n = 0;
  for (const Point& p : points) n += inside_on_active(box, p, active);
  return n;
}

struct SearchNode {
  Box allowed;    // every solution lies inside this
  Box mandatory;  // every solution contains this
  int bound = 0;  // positives inside allowed: upper bound for the subtree
  double log_vol = 0.0;
  std::uint64_t seq = 0;
};

struct NodeOrder {
  // Max-heap: higher bound first, then larger allowed volume, then FIFO.
  bool operator()(const SearchNode& a, const SearchNode& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.log_vol != b.log_vol) return a.log_vol < b.log_vol;
    return a.seq > b.seq;
  }
};

// Index of the negative strictly inside `allowed` closest to the anchor in
// space-normalized coordinates, or npos when the box interior is clean.
std::size_t nearest_inside_negative(const Box& allowed,
                                    std::span<const Point> negatives,
                                    const Point& anchor, const Box& space,
                                    const FeatureSet& active) {
  std::size_t best = static_cast<std::size_t>(-1);
  double best_dist = 0.0;
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const Point& q = negatives[i];
    if (!strictly_inside(allowed, q, active)) continue;
    double dist = 0.0;
    for (const std::size_t d : active) {
      const double w = space.width(d);
      const double delta = w > 0.0 ? (q[d] - anchor[d]) / w : 0.0;
      dist += delta * delta;
    }
    if (best == static_cast<std::size_t>(-1) || dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

// Feasible completion: shrinks `box` toward the anchor until no negative is
// strictly inside, cutting each offender along the dimension that keeps the
// largest fraction of the current width. Seeds the incumbent so that a budget
// stop still returns a full-dimensional box.
Box greedy_feasible_clip(Box box, std::span<const Point> negatives,
                         const Point& anchor, const Box& space,
                         const FeatureSet& active) {
  while (true) {
    const std::size_t i =
        nearest_inside_negative(box, negatives, anchor, space, active);
    if (i == static_cast<std::size_t>(-1)) return box;
    const Point& p = negatives[i];
    std::size_t best_d = active[0];
    bool best_high = true;
    double best_fraction = -1.0;
    for (const std::size_t d : active) {
      if (p[d] == anchor[d]) continue;
      const bool high = p[d] > anchor[d];
      const double fraction =
          (high ? p[d] - box.lower[d] : box.upper[d] - p[d]) / box.width(d);
      if (fraction > best_fraction) {
        best_fraction = fraction;
        best_d = d;
        best_high = high;
      }
    }
    if (best_fraction < 0.0) return box;  // cannot happen: p != anchor
    if (best_high) {
      box.upper[best_d] = p[best_d];
    } else {
      box.lower[best_d] = p[best_d];
    }
  }
}

void check_instance(const MaxBoxInstance& inst) {
  validate_box(inst.space);
  if (inst.anchor.size() != inst.space.dim()) {
    throw std::invalid_argument("anchor dimension mismatch");
  }
  if (inst.node_budget <= 0) {
    throw std::invalid_argument("node budget must be positive");
  }
  if (!inside_on_active(inst.space, inst.anchor, inst.active)) {
    throw std::invalid_argument("anchor outside the search space");
  }
  for (const Point& q : inst.negatives) {
    bool equals_anchor = true;
    for (const std::size_t d : inst.active) {
      if (q[d] != inst.anchor[d]) {
        equals_anchor = false;
        break;
      }
    }
    if (equals_anchor && !inst.active.empty()) {
      throw std::invalid_argument("a negative point coincides with the anchor");
    }
  }
}

}  // namespace

Box expand_box(const Box& box, std::span<const Point> negatives,
               const Box& space, const FeatureSet& active,
               ExpansionOrder order, Rng& rng) {
  for (const std::size_t d : active) {
    if (box.lower[d] < space.lower[d] || box.upper[d] > space.upper[d]) {
      throw std::invalid_argument("box leaves the space at dim " +
                                  std::to_string(d));
    }
  }
  for (const Point& q : negatives) {
    if (strictly_inside(box, q, active)) {
      throw std::invalid_argument(
          "expand_box requires a box with no negative strictly inside");
    }
  }

  Box out = box;

  struct Side {
    std::size_t d;
    bool high;
  };
  std::vector<Side> sides;
  sides.reserve(2 * active.size());
  for (const std::size_t d : active) {
    sides.push_back({d, false});
    sides.push_back({d, true});
  }

  // Blocker test: a negative constrains side d when it is strictly inside the
  // box's slab on every other active dimension, sits at or beyond the current
  // face, and lies strictly past the opposite face (a point touching the
  // opposite face stays on the boundary however far this side moves). A
  // negative exactly on the face keeps the side pinned in place.
  auto in_slab = [&](const Point& q, std::size_t skip) {
    for (const std::size_t d : active) {
      if (d == skip) continue;
      if (!(out.lower[d] < q[d] && q[d] < out.upper[d])) return false;
    }
    return true;
  };
  auto target_for = [&](const Side& s) {
    if (s.high) {
      double t = space.upper[s.d];
      for (const Point& q : negatives) {
        if (q[s.d] >= out.upper[s.d] && q[s.d] > out.lower[s.d] &&
            in_slab(q, s.d)) {
          t = std::min(t, q[s.d]);
        }
      }
      return t;
    }
    double t = space.lower[s.d];
    for (const Point& q : negatives) {
      if (q[s.d] <= out.lower[s.d] && q[s.d] < out.upper[s.d] &&
          in_slab(q, s.d)) {
        t = std::max(t, q[s.d]);
      }
    }
    return t;
  };
  auto apply = [&](const Side& s, double t) {
    if (s.high) {
      out.upper[s.d] = std::max(out.upper[s.d], t);
    } else {
      out.lower[s.d] = std::min(out.lower[s.d], t);
    }
  };

  // Once a side has been pushed to its target it can never move again (later
  // growth only enlarges the slab, adding blockers), so each side is
  // processed exactly once.
  if (order == ExpansionOrder::random) {
    shuffle(sides, rng);
    for (const Side& s : sides) apply(s, target_for(s));
    return out;
  }

  std::vector<Side> remaining = sides;
  while (!remaining.empty()) {
    std::size_t pick = 0;
    double pick_ratio = -1.0;
    double pick_growth = -1.0;
    double pick_target = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const Side& s = remaining[i];
      const double t = target_for(s);
      const double old_w = out.width(s.d);
      const double new_w =
          s.high ? t - out.lower[s.d] : out.upper[s.d] - t;
      const double growth = new_w - old_w;
      const double ratio =
          old_w > 0.0 ? new_w / old_w
                      : (new_w > 0.0
                             ? std::numeric_limits<double>::infinity()
                             : 1.0);
      if (ratio > pick_ratio ||
          (ratio == pick_ratio && growth > pick_growth)) {
        pick = i;
        pick_ratio = ratio;
        pick_growth = growth;
        pick_target = t;
      }
    }
    apply(remaining[pick], pick_target);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

Box find_max_box(const MaxBoxInstance& inst, ExpansionOrder order, Rng& rng) {
  check_instance(inst);
  const FeatureSet& active = inst.active;

  // Degenerate anchor box on active dims, caller bounds elsewhere.
  Box anchored = inst.space;
  for (const std::size_t d : active) {
    anchored.lower[d] = inst.anchor[d];
    anchored.upper[d] = inst.anchor[d];
  }

  Box incumbent = anchored;
  int incumbent_count = count_inside(incumbent, inst.positives, active);
  if (!inst.positives.empty()) {
    Box seeded = greedy_feasible_clip(inst.space, inst.negatives, inst.anchor,
                                      inst.space, active);
    const int seeded_count = count_inside(seeded, inst.positives, active);
    if (seeded_count >= incumbent_count) {
      incumbent = std::move(seeded);
      incumbent_count = seeded_count;
    }
  }

  std::priority_queue<SearchNode, std::vector<SearchNode>, NodeOrder> queue;
  std::uint64_t seq = 0;
  {
    SearchNode root;
    root.allowed = inst.space;
    root.mandatory = anchored;
    root.bound = count_inside(root.allowed, inst.positives, active);
    root.log_vol = log10_volume(root.allowed, active);
    root.seq = seq++;
    queue.push(std::move(root));
  }

  std::int64_t expanded = 0;
  while (!queue.empty() && expanded < inst.node_budget) {
    const SearchNode node = queue.top();
    queue.pop();
    ++expanded;

    // Best-first: once the best remaining bound cannot beat the incumbent,
    // nothing else in the queue can either.
    if (node.bound <= incumbent_count) break;

    const std::size_t neg = nearest_inside_negative(
        node.allowed, inst.negatives, inst.anchor, inst.space, active);
    if (neg == static_cast<std::size_t>(-1)) {
      // Feasible: allowed is the largest box in this subtree and its bound is
      // attained exactly.
      incumbent = node.allowed;
      incumbent_count = node.bound;
      continue;
    }

    const Point& p = inst.negatives[neg];
    if (inside_on_active(node.mandatory, p, active)) continue;  // dead branch

    // Dichotomy on p: child j clamps `allowed` away from p along one
    // violating dimension and must contain the slabs excluded by children
    // 1..j-1, keeping the children's solution sets disjoint.
    Box sibling_mandatory = node.mandatory;
    for (const std::size_t d : active) {
      const bool high = p[d] > node.mandatory.upper[d];
      const bool low = p[d] < node.mandatory.lower[d];
      if (!high && !low) continue;

      SearchNode child;
      child.allowed = node.allowed;
      if (high) {
        child.allowed.upper[d] = p[d];
      } else {
        child.allowed.lower[d] = p[d];
      }
      child.mandatory = sibling_mandatory;
      child.bound = count_inside(child.allowed, inst.positives, active);
      if (child.bound > incumbent_count) {
        child.log_vol = log10_volume(child.allowed, active);
        child.seq = seq++;
        queue.push(std::move(child));
      }
      if (high) {
        sibling_mandatory.upper[d] = p[d];
      } else {
        sibling_mandatory.lower[d] = p[d];
      }
    }
  }

  Box result = expand_box(incumbent, inst.negatives, inst.space, active,
                          order, rng);
  if (!inside_on_active(result, inst.anchor, active)) {
    throw std::logic_error("max-box result lost the anchor");
  }
  for (const Point& q : inst.negatives) {
    if (strictly_inside(result, q, active)) {
      throw std::logic_error("max-box result swallowed a negative point");
    }
  }
  return result;
}

}  // namespace anchorbox
