#pragma once

#include <cstdint>

#include "anchorbox/anchor.hpp"
#include "anchorbox/geometry.hpp"

namespace anchorbox {

// Euclidean ball around the anchor, the radial comparison method.
struct RadialRegion {
  Point center;
  double radius = 0.0;
};

struct RadialResult {
  RadialRegion region;
  double log10_volume = 0.0;
  bool certified = false;
  std::uint64_t evals = 0;
};

struct GreedyResult {
  Box box;
  double log10_volume = 0.0;
  bool certified = false;
  std::uint64_t evals = 0;
};

// Exact D-ball volume in log10.
double log10_ball_volume(std::size_t dim, double radius);

// Uniform draw from the ball: rejection from the enclosing box up to 10
// dimensions, direct (direction times radius scaling) above that.
Point sample_in_ball(const Point& center, double radius, Rng& rng);

// Certifies geometrically increasing radii with the run's scheduler and keeps
// the last one that passed. Radii run from 1e-3 of the space diagonal up to
// the largest ball that stays inside the space.
RadialResult fit_radial(AnchorRun& run, int steps = 100);

// Grows a small box around the anchor one side at a time (round-robin,
// logarithmic step sizes), freezing any side whose proposed step fails its
// test. Greedy by construction: it cannot escape a local optimum.
GreedyResult fit_greedy_anchor(AnchorRun& run, int steps_per_side = 100);

}  // namespace anchorbox
