#pragma once

#include <cmath>

#include "lineba/camera_pose.h"
#include "lineba/line_geometry.h"
#include "lineba/types.h"

namespace lineba {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  // fx = fy = 1, cx = cy = 0: the camera of normalized image coordinates.
  static CameraIntrinsics unit() { return {}; }

  bool is_valid() const { return fx > 0.0 && fy > 0.0; }

  // K_L = [[fy, 0, 0], [0, fx, 0], [-fy cx, -fx cy, fx fy]].
  Mat3 line_projection_matrix() const;

  Vec2 to_normalized(const Vec2& pixel) const {
    return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy};
  }
  Vec2 to_pixel(const Vec2& normalized) const {
    return {fx * normalized.x() + cx, fy * normalized.y() + cy};
  }
};

// Line segment endpoints as seen in one keyframe, in the image coordinates
// that match the intrinsics used for projection (normalized coordinates in
// the solver).
struct LineObservation {
  FrameId frame_id = 0;
  Vec2 s_obs = Vec2::Zero();
  Vec2 e_obs = Vec2::UnitX();

  bool is_valid() const { return (s_obs - e_obs).norm() > tol::kPixel; }
};

struct ProjectedLine {
  Vec3 l = Vec3::Zero();
};

// Relative-motion factor between two keyframe poses: residual
// sqrt_info * [R_m^T (dt - t_m); Log(R_m^T dR)] with (dR, dt) = T_i^-1 T_j.
struct OdometryFactor {
  FrameId frame_i = 0;
  FrameId frame_j = 1;
  CameraPose rel_pose_meas;
  Mat6 sqrt_info = Mat6::Identity();
};

// rho(s) = c^2 log(1 + s / c^2) over squared norms s.
struct CauchyLoss {
  double scale = 1.0;

  double rho(double s) const { return scale * scale * std::log1p(s / (scale * scale)); }
  double weight(double s) const { return 1.0 / (1.0 + s / (scale * scale)); }
};

// Throws kDegenerateProjection when (l1, l2) vanishes relative to |l|.
ProjectedLine project_line(const PluckerLine& line_in_frame, const CameraIntrinsics& K);

// [K_L 0]: derivative of the image line with respect to (n, d).
Mat36 d_image_line_d_plucker(const CameraIntrinsics& K);

// Signed point-to-line distances of both observed endpoints.
Vec2 residual_from_image_line(const Vec3& l, const LineObservation& obs);
Mat23 d_residual_d_image_line(const Vec3& l, const LineObservation& obs);

// Line expressed in the observing camera frame through the chain
// camera_i -> body_i -> world -> body_j -> camera_j.
PluckerLine line_in_observing_frame(const PluckerLine& line_anchor, const CameraPose& pose_anchor,
                                    const CameraPose& pose_obs, const CameraPose& extrinsic);

Vec2 line_residual(const InverseDepthLine& line_anchor, const CameraPose& pose_anchor,
                   const CameraPose& pose_obs, const CameraPose& extrinsic,
                   const LineObservation& obs, const CameraIntrinsics& K);

struct LineJacobians {
  Vec2 residual = Vec2::Zero();
  Mat26 d_pose_anchor = Mat26::Zero();
  Mat26 d_pose_obs = Mat26::Zero();
  Mat26 d_extrinsic = Mat26::Zero();
  Mat2 d_lambda = Mat2::Zero();
};

LineJacobians line_jacobians(const InverseDepthLine& line_anchor, const CameraPose& pose_anchor,
                             const CameraPose& pose_obs, const CameraPose& extrinsic,
                             const LineObservation& obs, const CameraIntrinsics& K);

// Baseline factor for a line held in the world frame (orthonormal state).
struct WorldLineJacobians {
  Vec2 residual = Vec2::Zero();
  Mat26 d_pose_obs = Mat26::Zero();
  Mat26 d_extrinsic = Mat26::Zero();
  Eigen::Matrix<double, 2, 4> d_orthonormal = Eigen::Matrix<double, 2, 4>::Zero();
};

Vec2 world_line_residual(const OrthonormalLine& line_world, const CameraPose& pose_obs,
                         const CameraPose& extrinsic, const LineObservation& obs,
                         const CameraIntrinsics& K);
WorldLineJacobians world_line_jacobians(const OrthonormalLine& line_world,
                                        const CameraPose& pose_obs, const CameraPose& extrinsic,
                                        const LineObservation& obs, const CameraIntrinsics& K);

// Reprojected minus observed normalized coordinates of an inverse-depth point.
// Throws kBehindCamera when the reprojected depth is not positive.
Vec2 point_residual(double inv_depth, const Vec2& anchor_pixel, const CameraPose& pose_anchor,
                    const CameraPose& pose_obs, const CameraPose& extrinsic, const Vec2& obs_pixel);

struct PointJacobians {
  Vec2 residual = Vec2::Zero();
  Mat26 d_pose_anchor = Mat26::Zero();
  Mat26 d_pose_obs = Mat26::Zero();
  Mat26 d_extrinsic = Mat26::Zero();
  Vec2 d_inv_depth = Vec2::Zero();
};

PointJacobians point_jacobians(double inv_depth, const Vec2& anchor_pixel,
                               const CameraPose& pose_anchor, const CameraPose& pose_obs,
                               const CameraPose& extrinsic, const Vec2& obs_pixel);

Vec6 odometry_residual(const OdometryFactor& factor, const CameraPose& pose_i,
                       const CameraPose& pose_j);

struct OdometryJacobians {
  Vec6 residual = Vec6::Zero();
  Mat6 d_pose_i = Mat6::Zero();
  Mat6 d_pose_j = Mat6::Zero();
};

OdometryJacobians odometry_jacobians(const OdometryFactor& factor, const CameraPose& pose_i,
                                     const CameraPose& pose_j);

}  // namespace lineba
