#include "lineba/line_geometry.h"

#include <cmath>

namespace lineba {

using so3::hat;

double PluckerLine::klein_residual() const {
  const double scale = n.norm() * d.norm();
  if (scale <= 0.0) return 0.0;
  return std::abs(n.dot(d)) / scale;
}

bool PluckerLine::is_valid() const {
  return n.allFinite() && d.allFinite() && d.norm() > tol::kDegenerate &&
         klein_residual() <= tol::kOrthogonality;
}

PluckerLine PluckerLine::normalized() const {
  const double scale = std::sqrt(n.squaredNorm() + d.squaredNorm());
  return {n / scale, d / scale};
}

double plucker_distance(const PluckerLine& a, const PluckerLine& b, bool allow_flip) {
  const Vec6 va = a.normalized().vector();
  const Vec6 vb = b.normalized().vector();
  const double same = (va - vb).norm();
  return allow_flip ? std::min(same, (va + vb).norm()) : same;
}

Mat3 OrthonormalLine::U() const { return so3::exp(theta3); }

Mat2 OrthonormalLine::W() const {
  const double w1 = std::cos(theta1);
  const double w2 = std::sin(theta1);
  Mat2 w;
  w << w1, w2, -w2, w1;
  return w;
}

OrthonormalLine OrthonormalLine::plus(const Vec4& delta) const {
  OrthonormalLine out;
  out.theta3 = so3::log(U() * so3::exp(delta.head<3>()));
  out.theta1 = theta1 + delta[3];
  return out;
}

InverseDepthLine::InverseDepthLine(double lambda_s, double lambda_e, const Vec2& anchor_s,
                                   const Vec2& anchor_e)
    : lambda_s_(lambda_s), lambda_e_(lambda_e), anchor_s_(anchor_s), anchor_e_(anchor_e) {
  if (!(lambda_s > 0.0) || !(lambda_e > 0.0) || !std::isfinite(lambda_s) ||
      !std::isfinite(lambda_e)) {
    throw Error(ErrorKind::kInvalidArgument, "inverse depths must be positive and finite");
  }
  if ((anchor_s - anchor_e).norm() <= tol::kPixel) {
    throw Error(ErrorKind::kInvalidArgument, "anchor endpoints coincide");
  }
}

PluckerLine plucker_from_inverse_depth(const InverseDepthLine& line) {
  const Vec3 s = line.start_point();
  const Vec3 e = line.end_point();
  PluckerLine out(s.cross(e), e - s);
  if (out.d.norm() < tol::kDegenerate) {
    throw Error(ErrorKind::kDegenerateLine, "endpoints coincide in 3D");
  }
  return out;
}

namespace {

// Depth z with z * ray on the line, i.e. z (ray x d) = n.
double ray_depth(const PluckerLine& line, const Vec3& ray) {
  const Vec3 rxd = ray.cross(line.d);
  if (rxd.norm() <= tol::kRay * ray.norm() * line.d.norm()) {
    throw Error(ErrorKind::kNoIntersection, "anchor ray is parallel to the line");
  }
  // The ray meets the line iff it lies in the plane through the origin with
  // normal n.
  if (std::abs(ray.dot(line.n)) > tol::kRay * ray.norm() * line.n.norm()) {
    throw Error(ErrorKind::kNoIntersection, "anchor ray misses the line");
  }
  const double depth = rxd.dot(line.n) / rxd.squaredNorm();
  if (!(depth > 0.0)) {
    throw Error(ErrorKind::kBehindCamera, "line intersects anchor ray behind the camera");
  }
  return depth;
}

}  // namespace

InverseDepthLine inverse_depth_from_plucker(const PluckerLine& line, const Vec2& anchor_s,
                                            const Vec2& anchor_e) {
  const double zs = ray_depth(line, anchor_s.homogeneous());
  const double ze = ray_depth(line, anchor_e.homogeneous());
  return {1.0 / zs, 1.0 / ze, anchor_s, anchor_e};
}

namespace {

double closest_ray_depth(const PluckerLine& line, const Vec3& ray) {
  const Vec3 p0 = line.point();
  const Vec3 dir = line.d.normalized();
  const double a = ray.dot(ray);
  const double b = ray.dot(dir);
  const double denom = a - b * b;
  if (denom <= tol::kRay * a) {
    throw Error(ErrorKind::kNoIntersection, "anchor ray is parallel to the line");
  }
  // Closest points between z * ray and p0 + s * dir.
  const double w_r = -ray.dot(p0);
  const double w_d = -dir.dot(p0);
  const double depth = (b * w_d - w_r) / denom;
  if (!(depth > 0.0)) {
    throw Error(ErrorKind::kBehindCamera, "closest point lies behind the camera");
  }
  return depth;
}

}  // namespace

InverseDepthLine closest_inverse_depth_line(const PluckerLine& line, const Vec2& anchor_s,
                                            const Vec2& anchor_e) {
  const double zs = closest_ray_depth(line, anchor_s.homogeneous());
  const double ze = closest_ray_depth(line, anchor_e.homogeneous());
  return {1.0 / zs, 1.0 / ze, anchor_s, anchor_e};
}

OrthonormalLine orthonormal_from_plucker(const PluckerLine& line) {
  const double n_norm = line.n.norm();
  const double d_norm = line.d.norm();
  if (n_norm <= tol::kDegenerate || d_norm <= tol::kDegenerate) {
    throw Error(ErrorKind::kDegenerateLine, "orthonormal form needs nonzero n and d");
  }
  if (line.klein_residual() > tol::kOrthogonality) {
    throw Error(ErrorKind::kDegenerateLine, "n and d are not orthogonal");
  }
  // Thin QR of [n d] via Gram-Schmidt; the third column completes the frame.
  const Vec3 u1 = line.n / n_norm;
  const Vec3 d_perp = line.d - u1.dot(line.d) * u1;
  const Vec3 u2 = d_perp.normalized();
  const Vec3 u3 = u1.cross(u2);
  if (u3.norm() <= tol::kDegenerate) {
    throw Error(ErrorKind::kDegenerateLine, "n x d vanishes");
  }
  Mat3 u;
  u << u1, u2, u3;

  OrthonormalLine out;
  out.theta3 = so3::log(u);
  out.theta1 = std::atan2(d_norm, n_norm);
  return out;
}

PluckerLine plucker_from_orthonormal(const OrthonormalLine& line) {
  const Mat3 u = line.U();
  return {std::cos(line.theta1) * u.col(0), std::sin(line.theta1) * u.col(1)};
}

PluckerLine transform_line(const PluckerLine& line, const CameraPose& pose) {
  const Vec3 rd = pose.R * line.d;
  return {pose.R * line.n + pose.t.cross(rd), rd};
}

PluckerLine invert_transform_line(const PluckerLine& line, const CameraPose& pose) {
  const Mat3 rt = pose.R.transpose();
  return {rt * (line.n - pose.t.cross(line.d)), rt * line.d};
}

Mat6 line_motion_matrix(const CameraPose& pose) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = pose.R;
  m.topRightCorner<3, 3>() = hat(pose.t) * pose.R;
  m.bottomRightCorner<3, 3>() = pose.R;
  return m;
}

Mat6 inverse_line_motion_matrix(const CameraPose& pose) {
  const Mat3 rt = pose.R.transpose();
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 3>() = -rt * hat(pose.t);
  m.bottomRightCorner<3, 3>() = rt;
  return m;
}

Mat62 d_plucker_d_inverse_depth(const InverseDepthLine& line) {
  const double ls = line.lambda_s();
  const double le = line.lambda_e();
  const Vec3 s = line.ray_s();
  const Vec3 e = line.ray_e();
  const Vec3 sxe = s.cross(e);
  Mat62 j;
  j.block<3, 1>(0, 0) = -sxe / (ls * ls * le);
  j.block<3, 1>(0, 1) = -sxe / (ls * le * le);
  j.block<3, 1>(3, 0) = s / (ls * ls);
  j.block<3, 1>(3, 1) = -e / (le * le);
  return j;
}

Mat64 d_plucker_d_orthonormal(const OrthonormalLine& line) {
  const Mat3 u = line.U();
  const double w1 = std::cos(line.theta1);
  const double w2 = std::sin(line.theta1);
  Mat64 j;
  j.block<3, 3>(0, 0) = -w1 * u * hat(Vec3::UnitX());
  j.block<3, 3>(3, 0) = -w2 * u * hat(Vec3::UnitY());
  j.block<3, 1>(0, 3) = -w2 * u.col(0);
  j.block<3, 1>(3, 3) = w1 * u.col(1);
  return j;
}

Mat6 d_transform_d_pose(const PluckerLine& line, const CameraPose& pose) {
  const Vec3 rd = pose.R * line.d;
  Mat6 j = Mat6::Zero();
  j.block<3, 3>(0, 0) = -hat(rd);
  j.block<3, 3>(0, 3) = -pose.R * hat(line.n) - hat(pose.t) * pose.R * hat(line.d);
  j.block<3, 3>(3, 3) = -pose.R * hat(line.d);
  return j;
}

Mat6 d_inverse_transform_d_pose(const PluckerLine& line, const CameraPose& pose) {
  const PluckerLine out = invert_transform_line(line, pose);
  Mat6 j = Mat6::Zero();
  j.block<3, 3>(0, 0) = pose.R.transpose() * hat(line.d);
  j.block<3, 3>(0, 3) = hat(out.n);
  j.block<3, 3>(3, 3) = hat(out.d);
  return j;
}

}  // namespace lineba
