#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Geometry>

#include "lineba/camera_pose.h"
#include "lineba/line_geometry.h"

namespace lineba::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 uniform_vec3(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

// Rotation from a random unit quaternion, independent of so3::exp.
inline Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

// Rotation by at most `angle` about a random axis (Eigen's angle-axis).
inline Mat3 small_rotation(Rng& rng, double angle) {
  Vec3 axis = uniform_vec3(rng, -1.0, 1.0).normalized();
  return Eigen::AngleAxisd(uniform(rng, -angle, angle), axis).toRotationMatrix();
}

inline CameraPose random_pose(Rng& rng, double t_scale = 1.0) {
  return {random_rotation(rng), uniform_vec3(rng, -t_scale, t_scale)};
}

inline CameraPose near_identity_pose(Rng& rng, double angle, double t_scale) {
  return {small_rotation(rng, angle), uniform_vec3(rng, -t_scale, t_scale)};
}

// Plain 3-vector cross product written out, so oracles do not share Eigen's.
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

// Distance between two lines in Plücker form up to nonzero scale.
inline double line_error(const PluckerLine& a, const PluckerLine& b) {
  Vec6 va = a.vector() / a.vector().norm();
  Vec6 vb = b.vector() / b.vector().norm();
  return std::min((va - vb).norm(), (va + vb).norm());
}

// Central differences of f around a base point, with the increment applied by
// `perturb(i, h)` returning f at base (+) h e_i.
inline MatX central_difference(int rows, int cols,
                               const std::function<VecX(int, double)>& perturb,
                               double h = 1e-6) {
  MatX J(rows, cols);
  for (int i = 0; i < cols; ++i) J.col(i) = (perturb(i, h) - perturb(i, -h)) / (2.0 * h);
  return J;
}

inline double relative_error(const MatX& analytic, const MatX& numeric, double floor = 1e-8) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), floor);
}

// Pose (+) delta with tangent ordered [dt, dtheta], rotation via Eigen's
// angle-axis.
inline CameraPose pose_plus(const CameraPose& p, const Vec6& delta) {
  const Vec3 w = delta.tail<3>();
  Mat3 dr = Mat3::Identity();
  if (w.norm() > 0.0) dr = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
  return {p.R * dr, p.t + delta.head<3>()};
}

inline Vec6 unit6(int i, double h) {
  Vec6 v = Vec6::Zero();
  v[i] = h;
  return v;
}

}  // namespace lineba::testing
