#pragma once

#include <span>
#include <vector>

#include "lineba/camera_pose.h"

namespace lineba {

struct TrajectorySample {
  double timestamp = 0.0;
  CameraPose pose;
};

// Ordered poses with strictly increasing timestamps (frame indices for
// synthetic runs).
class Trajectory {
 public:
  Trajectory() = default;
  // Throws kInvalidArgument unless timestamps strictly increase.
  explicit Trajectory(std::vector<TrajectorySample> samples);
  // Timestamps 0, 1, 2, ...
  static Trajectory from_poses(std::span<const CameraPose> poses);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }

 private:
  std::vector<TrajectorySample> samples_;
};

// Rigid transform T (no scale) minimizing sum |T * p_est - p_truth|^2 over
// the position pairs.
CameraPose align_positions(const Trajectory& estimate, const Trajectory& truth);

// RMSE of position differences, optionally after rigid alignment. Throws
// kLengthMismatch unless sizes and timestamps agree.
double ate_rmse(const Trajectory& estimate, const Trajectory& truth, bool align = true);

struct RpeResult {
  double translation_rmse = 0.0;  // length units
  double rotation_rmse = 0.0;     // rad
};

// Relative pose error over frame gap delta: E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d})
// with Q truth and P estimate; RMSE of |t(E_i)| and |Log R(E_i)|.
RpeResult rpe(const Trajectory& estimate, const Trajectory& truth, int delta = 1);

}  // namespace lineba
