#pragma once

#include "lineba/initialization.h"
#include "lineba/solver.h"

namespace lineba {

struct FeatureInitOptions {
  InitOptions init;
  // A line is kept only when some view's back-projection plane meets the
  // anchor plane at least at this angle (rad); shallower intersections leave
  // the depths poorly constrained.
  double min_line_plane_angle = 0.0174533;  // 1 degree
};

// Re-triangulates every feature of the window at the current poses: points
// by linear inverse-depth least squares, lines by the plane-distance
// equations. Features that fail, or end up behind an observing camera, are
// removed together with their factors. Returns the number removed.
int initialize_features(FactorGraph& graph, SlidingWindowState& state,
                        const FeatureInitOptions& options = {});

// Removes features without any observation outside their anchor frame.
int prune_unconstrained_features(FactorGraph& graph, SlidingWindowState& state);

}  // namespace lineba
