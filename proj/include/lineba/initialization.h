#pragma once

#include <span>
#include <vector>

#include "lineba/camera_pose.h"
#include "lineba/line_geometry.h"
#include "lineba/residuals.h"

namespace lineba {

// a x + b y + c z + d = 0.
struct PlaneGeneral {
  Vec3 normal = Vec3::UnitZ();  // (a, b, c)
  double d = 0.0;

  Vec4 vector() const { return {normal.x(), normal.y(), normal.z(), d}; }
  double signed_distance(const Vec3& p) const { return (normal.dot(p) + d) / normal.norm(); }
  // Distance of the plane from the origin of its frame.
  double offset() const { return std::abs(d) / normal.norm(); }
};

// A line feature anchored in one keyframe plus its observations elsewhere.
struct LineTrack {
  FrameId anchor_frame = 0;
  Vec2 anchor_s = Vec2::Zero();
  Vec2 anchor_e = Vec2::UnitX();
  std::vector<LineObservation> observations;
};

enum class InitStatus {
  kOk,
  kRotationOnlyDegenerate,
  kBehindCamera,
  kInsufficientParallax,
  kOutOfRange,
};

const char* to_string(InitStatus status);

struct InverseDepthInit {
  InitStatus status = InitStatus::kOk;
  double lambda_s = 0.0;
  double lambda_e = 0.0;
  int used_views = 0;

  bool ok() const { return status == InitStatus::kOk; }
};

enum class InitSolver {
  kLinear,       // closed-form least squares in 1/lambda per endpoint
  kGaussNewton,  // iterative least squares directly in lambda
};

struct InitOptions {
  // |d| / |(a, b, c)|, in length units, above which a view has parallax.
  double min_plane_offset = 0.01;
  double min_inverse_depth = 1e-4;
  double max_inverse_depth = 1e4;
  InitSolver solver = InitSolver::kLinear;
};

// Plane through the observing camera center and the observed segment,
// expressed in the anchor frame. rel_pose maps observing-frame coordinates
// into the anchor frame. Throws kDegenerateObservation on coincident
// endpoints.
PlaneGeneral observation_plane(const LineObservation& obs, const CameraPose& rel_pose);

// Closed-form depths from one non-anchor view (track.observations[0]).
InverseDepthInit init_inverse_depth_two_view(const LineTrack& track, const CameraPose& rel_pose);

// Least squares over all views; rel_poses[k] belongs to track.observations[k].
// Views failing the parallax gate contribute nothing.
InverseDepthInit init_inverse_depth_multi_view(const LineTrack& track,
                                               std::span<const CameraPose> rel_poses,
                                               const InitOptions& options = {});

// Baseline: dual Plücker matrix pi1 pi2^T - pi2 pi1^T of the anchor plane and
// the observation plane. Never signals degeneracy.
PluckerLine init_plucker_matrix(const LineTrack& track, const CameraPose& rel_pose);
PluckerLine plucker_from_dual_matrix(const Eigen::Matrix4d& dual);

// Depth of an anchored point from the other views (linear least squares on
// the cross-product constraint). Returns the inverse depth, or a status
// other than kOk.
struct PointInit {
  InitStatus status = InitStatus::kOk;
  double inv_depth = 0.0;
};
PointInit init_point_inverse_depth(const Vec2& anchor_pixel, std::span<const Vec2> obs_pixels,
                                   std::span<const CameraPose> rel_poses,
                                   const InitOptions& options = {});

}  // namespace lineba
