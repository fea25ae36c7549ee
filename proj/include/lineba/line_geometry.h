#pragma once

#include "lineba/camera_pose.h"
#include "lineba/types.h"

namespace lineba {

// Plücker line (n, d): n = P x d for any point P on the line, d the
// direction. Stored unnormalized; two instances describe the same line when
// they agree up to a nonzero scale.
struct PluckerLine {
  Vec3 n = Vec3::Zero();
  Vec3 d = Vec3::UnitX();

  PluckerLine() = default;
  PluckerLine(const Vec3& normal, const Vec3& direction) : n(normal), d(direction) {}

  Vec6 vector() const {
    Vec6 v;
    v << n, d;
    return v;
  }
  static PluckerLine from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

  // |n.d| / (|n||d|); zero for a valid line. Returns 0 when n vanishes.
  double klein_residual() const;
  bool is_valid() const;

  // Jointly scaled so that |n|^2 + |d|^2 = 1.
  PluckerLine normalized() const;

  // Closest point on the line to the origin.
  Vec3 point() const { return d.cross(n) / d.squaredNorm(); }

  static PluckerLine through(const Vec3& p, const Vec3& q) { return {p.cross(q), q - p}; }
};

// Distance between two Plücker lines after joint normalization. With
// allow_flip the sign of the second line is chosen to minimize the distance.
double plucker_distance(const PluckerLine& a, const PluckerLine& b, bool allow_flip = true);

// Minimal 4-parameter form: U = Exp(theta3) in SO(3), W = R(theta1) in SO(2)
// with (cos theta1, sin theta1) = (|n|, |d|) / sqrt(|n|^2 + |d|^2).
struct OrthonormalLine {
  Vec3 theta3 = Vec3::Zero();
  double theta1 = 0.0;

  Mat3 U() const;
  // [[w1, w2], [-w2, w1]] with w1 = cos theta1, w2 = sin theta1.
  Mat2 W() const;

  // Right-multiplied increment: U <- U Exp(delta[0:3]), theta1 <- theta1 + delta[3].
  OrthonormalLine plus(const Vec4& delta) const;
};

// Two inverse depths over fixed anchor-frame normalized endpoint pixels.
// Only the inverse depths may change after construction.
class InverseDepthLine {
 public:
  // Throws kInvalidArgument on non-positive inverse depths or anchors closer
  // than tol::kPixel.
  InverseDepthLine(double lambda_s, double lambda_e, const Vec2& anchor_s, const Vec2& anchor_e);

  double lambda_s() const { return lambda_s_; }
  double lambda_e() const { return lambda_e_; }
  Vec2 inverse_depths() const { return {lambda_s_, lambda_e_}; }
  const Vec2& anchor_s() const { return anchor_s_; }
  const Vec2& anchor_e() const { return anchor_e_; }

  Vec3 ray_s() const { return anchor_s_.homogeneous(); }
  Vec3 ray_e() const { return anchor_e_.homogeneous(); }
  Vec3 start_point() const { return ray_s() / lambda_s_; }
  Vec3 end_point() const { return ray_e() / lambda_e_; }

  InverseDepthLine with_inverse_depths(double lambda_s, double lambda_e) const {
    return {lambda_s, lambda_e, anchor_s_, anchor_e_};
  }

 private:
  double lambda_s_;
  double lambda_e_;
  Vec2 anchor_s_;
  Vec2 anchor_e_;
};

// n = S x E, d = E - S with S = s / lambda_s, E = e / lambda_e.
PluckerLine plucker_from_inverse_depth(const InverseDepthLine& line);

// Intersects the anchor rays with the line. Throws kNoIntersection when a ray
// is parallel to or misses the line, kBehindCamera for non-positive depth.
InverseDepthLine inverse_depth_from_plucker(const PluckerLine& line, const Vec2& anchor_s,
                                            const Vec2& anchor_e);

// Depths of the points on the anchor rays closest to the line, for lines that
// need not pass through the rays exactly. Throws kNoIntersection for a ray
// parallel to the line and kBehindCamera for non-positive depth.
InverseDepthLine closest_inverse_depth_line(const PluckerLine& line, const Vec2& anchor_s,
                                            const Vec2& anchor_e);

// Throws kDegenerateLine when n or d vanishes or they are not orthogonal.
OrthonormalLine orthonormal_from_plucker(const PluckerLine& line);
PluckerLine plucker_from_orthonormal(const OrthonormalLine& line);

// L' = T L for the motion x' = R x + t:  n' = R n + [t]x R d,  d' = R d.
PluckerLine transform_line(const PluckerLine& line, const CameraPose& pose);
// L' = T^-1 L:  n' = R^T n - R^T [t]x d,  d' = R^T d.
PluckerLine invert_transform_line(const PluckerLine& line, const CameraPose& pose);

// 6x6 line motion matrices of the two transforms above.
Mat6 line_motion_matrix(const CameraPose& pose);
Mat6 inverse_line_motion_matrix(const CameraPose& pose);

// d(n, d) / d(lambda_s, lambda_e).
Mat62 d_plucker_d_inverse_depth(const InverseDepthLine& line);
// d(n, d) / d(dtheta3, dtheta1) for the increment of OrthonormalLine::plus.
Mat64 d_plucker_d_orthonormal(const OrthonormalLine& line);

// Derivatives of T L with respect to the pose tangent [dt, dtheta] (6x6), and
// of T^-1 L likewise.
Mat6 d_transform_d_pose(const PluckerLine& line, const CameraPose& pose);
Mat6 d_inverse_transform_d_pose(const PluckerLine& line, const CameraPose& pose);

}  // namespace lineba
