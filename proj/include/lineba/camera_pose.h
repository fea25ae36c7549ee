#pragma once

#include "lineba/so3.h"
#include "lineba/types.h"

namespace lineba {

// Rigid transform x_world = R * x_frame + t. Used for world-from-body poses,
// the body-from-camera extrinsic and relative motions alike.
//
// Tangent vectors are ordered [dt, dtheta]: translation is perturbed
// additively, rotation on the right (R <- R Exp(dtheta)).
struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  CameraPose() = default;
  CameraPose(const Mat3& rotation, const Vec3& translation) : R(rotation), t(translation) {}

  static CameraPose Identity() { return {}; }

  // Throws kInvalidArgument when R is not a proper rotation within 1e-10.
  static CameraPose checked(const Mat3& rotation, const Vec3& translation);
  bool is_valid(double tolerance = 1e-10) const;

  CameraPose inverse() const { return {R.transpose(), -R.transpose() * t}; }
  CameraPose operator*(const CameraPose& other) const {
    return {R * other.R, R * other.t + t};
  }
  Vec3 operator*(const Vec3& p) const { return R * p + t; }

  CameraPose plus(const Vec6& delta) const {
    return {R * so3::exp(delta.tail<3>()), t + delta.head<3>()};
  }
  // Inverse of plus: other == this->plus(this->minus(other)).
  Vec6 minus(const CameraPose& other) const;
};

// a^-1 * b, the motion of b expressed in a.
inline CameraPose relative(const CameraPose& a, const CameraPose& b) { return a.inverse() * b; }

}  // namespace lineba
