#pragma once

#include "lineba/solver.h"

namespace lineba {

struct WindowUpdate {
  FactorGraph graph;
  SlidingWindowState state;
  bool changed = false;
};

// Eliminates one keyframe by Schur complement of the prior and odometry
// factors touching it, linearized at the current state. The first keyframe
// of a window without prior is the gauge anchor and is conditioned on rather
// than eliminated. Visual observations in the eliminated frame are dropped;
// features anchored there move to their next observing keyframe or are
// removed when nothing else observes them.
WindowUpdate marginalize_frame(const FactorGraph& graph, const SlidingWindowState& state,
                               FrameId frame);

// No-op unless the window holds at least max_keyframes keyframes.
WindowUpdate marginalize_oldest(const FactorGraph& graph, const SlidingWindowState& state);

// Relative motion a->c from a->b and b->c, with first-order covariance
// propagation of the two measurement noises.
OdometryFactor compose_odometry(const OdometryFactor& ab, const OdometryFactor& bc);

// Symmetric inverse square root of a covariance, and the reverse.
Mat6 sqrt_information_from_covariance(const Mat6& covariance);
Mat6 covariance_from_sqrt_information(const Mat6& sqrt_info);

enum class WindowAction { kNone, kMarginalizedOldest, kDroppedSecondNewest };
const char* to_string(WindowAction action);

struct PolicyResult {
  FactorGraph graph;
  SlidingWindowState state;
  WindowAction action = WindowAction::kNone;
};

// Call after the newest frame has been appended. A keyframe second-newest
// frame pushes the oldest keyframe out once the window exceeds its size;
// otherwise the second-newest frame's visual measurements are discarded and
// its odometry is folded into the next factor.
PolicyResult second_newest_policy(const FactorGraph& graph, const SlidingWindowState& state,
                                  bool is_keyframe);

}  // namespace lineba
