#include "lineba/initialization.h"

#include <cmath>
#include <limits>

namespace lineba {

const char* to_string(InitStatus status) {
  switch (status) {
    case InitStatus::kOk: return "ok";
    case InitStatus::kRotationOnlyDegenerate: return "rotation-only degenerate";
    case InitStatus::kBehindCamera: return "behind camera";
    case InitStatus::kInsufficientParallax: return "insufficient parallax";
    case InitStatus::kOutOfRange: return "inverse depth out of range";
  }
  return "unknown";
}

PlaneGeneral observation_plane(const LineObservation& obs, const CameraPose& rel_pose) {
  if (!obs.is_valid()) {
    throw Error(ErrorKind::kDegenerateObservation, "observed endpoints coincide");
  }
  PlaneGeneral plane;
  plane.normal = rel_pose.R * obs.s_obs.homogeneous().cross(obs.e_obs.homogeneous());
  plane.d = -plane.normal.dot(rel_pose.t);
  return plane;
}

namespace {

InitStatus check_range(double lambda, const InitOptions& options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) return InitStatus::kBehindCamera;
  if (lambda < options.min_inverse_depth || lambda > options.max_inverse_depth) {
    return InitStatus::kOutOfRange;
  }
  return InitStatus::kOk;
}

// Unit-normal plane rows (a, d) / |a| of the views that pass the gate.
struct PlaneRows {
  std::vector<Vec3> normals;
  std::vector<double> offsets;
};

PlaneRows usable_planes(const LineTrack& track, std::span<const CameraPose> rel_poses,
                        double min_offset) {
  PlaneRows rows;
  for (std::size_t k = 0; k < track.observations.size(); ++k) {
    const PlaneGeneral plane = observation_plane(track.observations[k], rel_poses[k]);
    const double norm = plane.normal.norm();
    if (plane.offset() <= min_offset) continue;
    rows.normals.push_back(plane.normal / norm);
    rows.offsets.push_back(plane.d / norm);
  }
  return rows;
}

// argmin_z sum_k (z a_k.p + d_k)^2, returned as 1/z.
double solve_endpoint_linear(const PlaneRows& rows, const Vec3& ray) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < rows.normals.size(); ++k) {
    const double ap = rows.normals[k].dot(ray);
    num -= ap * rows.offsets[k];
    den += ap * ap;
  }
  if (den <= std::numeric_limits<double>::min() || num == 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return den / num;
}

// Same minimizer found by Gauss-Newton on r_k(lambda) = a_k.p / lambda + d_k.
double solve_endpoint_gauss_newton(const PlaneRows& rows, const Vec3& ray, double lambda) {
  for (int iter = 0; iter < 50 && std::isfinite(lambda) && lambda > 0.0; ++iter) {
    double jtj = 0.0;
    double jtr = 0.0;
    for (std::size_t k = 0; k < rows.normals.size(); ++k) {
      const double ap = rows.normals[k].dot(ray);
      const double r = ap / lambda + rows.offsets[k];
      const double j = -ap / (lambda * lambda);
      jtj += j * j;
      jtr += j * r;
    }
    if (jtj <= 0.0) break;
    const double step = -jtr / jtj;
    double next = lambda + step;
    // Stay in the positive half line.
    while (next <= 0.0) next = 0.5 * (next + lambda);
    const bool done = std::abs(step) <= 1e-15 * std::abs(lambda);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace

InverseDepthInit init_inverse_depth_two_view(const LineTrack& track, const CameraPose& rel_pose) {
  if (track.observations.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "two-view initialization needs one observation");
  }
  const PlaneGeneral plane = observation_plane(track.observations.front(), rel_pose);
  InverseDepthInit out;
  out.used_views = 1;
  if (plane.offset() < tol::kRotationOnly) {
    out.status = InitStatus::kRotationOnlyDegenerate;
    out.used_views = 0;
    return out;
  }
  out.lambda_s = -plane.normal.dot(track.anchor_s.homogeneous()) / plane.d;
  out.lambda_e = -plane.normal.dot(track.anchor_e.homogeneous()) / plane.d;
  if (!(out.lambda_s > 0.0) || !(out.lambda_e > 0.0)) {
    out.status = InitStatus::kBehindCamera;
  }
  return out;
}

InverseDepthInit init_inverse_depth_multi_view(const LineTrack& track,
                                               std::span<const CameraPose> rel_poses,
                                               const InitOptions& options) {
  if (rel_poses.size() != track.observations.size()) {
    throw Error(ErrorKind::kLengthMismatch, "one relative pose per observation required");
  }
  const PlaneRows rows = usable_planes(track, rel_poses, options.min_plane_offset);
  InverseDepthInit out;
  out.used_views = static_cast<int>(rows.normals.size());
  if (rows.normals.empty()) {
    out.status = InitStatus::kInsufficientParallax;
    return out;
  }
  const Vec3 ray_s = track.anchor_s.homogeneous();
  const Vec3 ray_e = track.anchor_e.homogeneous();
  out.lambda_s = solve_endpoint_linear(rows, ray_s);
  out.lambda_e = solve_endpoint_linear(rows, ray_e);
  if (options.solver == InitSolver::kGaussNewton) {
    // Seed from the view with the largest plane offset.
    std::size_t best = 0;
    for (std::size_t k = 1; k < rows.offsets.size(); ++k) {
      if (std::abs(rows.offsets[k]) > std::abs(rows.offsets[best])) best = k;
    }
    const double seed_s = -rows.normals[best].dot(ray_s) / rows.offsets[best];
    const double seed_e = -rows.normals[best].dot(ray_e) / rows.offsets[best];
    if (seed_s > 0.0) out.lambda_s = solve_endpoint_gauss_newton(rows, ray_s, seed_s);
    if (seed_e > 0.0) out.lambda_e = solve_endpoint_gauss_newton(rows, ray_e, seed_e);
  }
  out.status = check_range(out.lambda_s, options);
  if (out.status == InitStatus::kOk) out.status = check_range(out.lambda_e, options);
  return out;
}

PluckerLine plucker_from_dual_matrix(const Eigen::Matrix4d& dual) {
  const Mat3 skew = dual.topLeftCorner<3, 3>();
  return {dual.block<3, 1>(0, 3), so3::vee(0.5 * (skew - skew.transpose()))};
}

PluckerLine init_plucker_matrix(const LineTrack& track, const CameraPose& rel_pose) {
  if (track.observations.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "Plücker-matrix initialization needs one observation");
  }
  LineObservation anchor_obs{track.anchor_frame, track.anchor_s, track.anchor_e};
  const Vec4 pi1 = observation_plane(anchor_obs, CameraPose::Identity()).vector();
  const Vec4 pi2 = observation_plane(track.observations.front(), rel_pose).vector();
  const Eigen::Matrix4d dual = pi1 * pi2.transpose() - pi2 * pi1.transpose();
  return plucker_from_dual_matrix(dual);
}

PointInit init_point_inverse_depth(const Vec2& anchor_pixel, std::span<const Vec2> obs_pixels,
                                   std::span<const CameraPose> rel_poses,
                                   const InitOptions& options) {
  if (obs_pixels.size() != rel_poses.size()) {
    throw Error(ErrorKind::kLengthMismatch, "one relative pose per observation required");
  }
  // Anchor point z * a seen from view k: X_k = R^T (z a - t); require
  // o_k x X_k = 0, i.e. z ([o]x R^T a) = [o]x R^T t.
  const Vec3 ray = anchor_pixel.homogeneous();
  double num = 0.0;
  double den = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < obs_pixels.size(); ++k) {
    const CameraPose& rel = rel_poses[k];
    if (rel.t.norm() <= options.min_plane_offset) continue;
    const Mat3 ox = so3::hat(obs_pixels[k].homogeneous());
    const Vec3 a = ox * rel.R.transpose() * ray;
    const Vec3 b = ox * rel.R.transpose() * rel.t;
    num += a.dot(b);
    den += a.squaredNorm();
    ++used;
  }
  PointInit out;
  if (used == 0 || den <= std::numeric_limits<double>::min()) {
    out.status = InitStatus::kInsufficientParallax;
    return out;
  }
  const double depth = num / den;
  out.inv_depth = 1.0 / depth;
  out.status = check_range(out.inv_depth, options);
  return out;
}

}  // namespace lineba
