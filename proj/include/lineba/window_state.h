#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lineba/camera_pose.h"
#include "lineba/line_geometry.h"
#include "lineba/residuals.h"

namespace lineba {

// How line landmarks enter the state vector.
enum class LineRepresentation {
  kInverseDepth,  // 2 parameters per line, anchored in the first observing keyframe
  kOrthonormal,   // 4 parameters per line, held in the world frame
  kPointOnly,     // lines are ignored entirely
};

const char* to_string(LineRepresentation representation);
std::optional<LineRepresentation> parse_line_representation(const std::string& text);

// Number of state parameters one line contributes.
int line_dof(LineRepresentation representation);

struct Keyframe {
  FrameId id = 0;
  CameraPose pose;  // world-from-body
  // Velocity and IMU bias blocks would sit here once odometry factors are
  // replaced by pre-integrated IMU factors.
};

struct PointLandmark {
  FrameId anchor_frame = 0;
  Vec2 anchor_pixel = Vec2::Zero();
  double inv_depth = 1.0;
};

struct LineLandmark {
  FrameId anchor_frame = 0;
  InverseDepthLine inverse_depth;  // anchor camera frame
  OrthonormalLine orthonormal;     // world frame, used by the baseline

  Vec2 anchor_s() const { return inverse_depth.anchor_s(); }
  Vec2 anchor_e() const { return inverse_depth.anchor_e(); }
};

// Gaussian prior left behind by marginalization, over the poses in `frames`
// (6 tangent columns each). With delta_k = linearization_point[k] boxminus
// pose_k the prior cost is |r_p + J_p delta|^2 + constant_cost.
struct MarginalPrior {
  std::vector<FrameId> frames;
  std::vector<CameraPose> linearization_point;
  MatX J_p;
  VecX r_p;
  double constant_cost = 0.0;

  bool empty() const { return frames.empty(); }
  int dimension() const { return 6 * static_cast<int>(frames.size()); }
  bool involves(FrameId id) const;
};

struct SlidingWindowState {
  std::vector<Keyframe> keyframes;  // oldest first
  CameraPose extrinsic;             // body-from-camera
  std::map<FeatureId, PointLandmark> points;
  std::map<FeatureId, LineLandmark> lines;
  MarginalPrior prior;
  LineRepresentation representation = LineRepresentation::kInverseDepth;
  std::size_t max_keyframes = 10;

  // Index into keyframes, or -1.
  int index_of(FrameId id) const;
  bool contains(FrameId id) const { return index_of(id) >= 0; }
  // Throws kMissingState for unknown ids.
  const CameraPose& pose(FrameId id) const;
  CameraPose& pose(FrameId id);
  CameraPose camera_pose(FrameId id) const { return pose(id) * extrinsic; }

  // Rebuilds the orthonormal world-frame lines from the inverse-depth ones
  // (or the reverse) and switches the active representation.
  void set_representation(LineRepresentation representation);
};

struct PointObservation {
  FeatureId feature = 0;
  FrameId frame_id = 0;
  Vec2 pixel = Vec2::Zero();  // normalized image coordinates
};

struct LineFactor {
  FeatureId feature = 0;
  LineObservation obs;
};

struct FactorGraph {
  std::vector<OdometryFactor> odometry;
  std::vector<PointObservation> points;
  std::vector<LineFactor> lines;
  // Isotropic whitening of visual residuals: focal / sigma_px.
  double point_sqrt_info = 1.0;
  double line_sqrt_info = 1.0;
  // Intrinsics matching the observation coordinates (unit for normalized).
  CameraIntrinsics intrinsics = CameraIntrinsics::unit();
};

// Default whitening: (sigma_px / focal)^-1.
inline double visual_sqrt_info(double focal, double sigma_px = 1.5) { return focal / sigma_px; }

// Throws kMissingState when a factor references a frame or feature that does
// not exist, or a feature's anchor frame is outside the window.
void check_consistency(const FactorGraph& graph, const SlidingWindowState& state);

}  // namespace lineba
