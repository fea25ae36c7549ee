#pragma once

#include <Eigen/Geometry>

#include "lineba/types.h"

// Small SO(3) toolbox: hat/vee, exponential and logarithm maps, and the right
// Jacobian with its inverse.
namespace lineba::so3 {

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

Mat3 exp(const Vec3& omega);
Vec3 log(const Mat3& rotation);

// Jr(phi) with Exp(phi + dphi) ~= Exp(phi) Exp(Jr(phi) dphi).
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inverse(const Vec3& phi);

// Projects an approximately orthogonal matrix onto SO(3).
Mat3 orthonormalize(const Mat3& m);

}  // namespace lineba::so3
