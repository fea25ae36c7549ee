#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lineba {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat62 = Eigen::Matrix<double, 6, 2>;
using Mat64 = Eigen::Matrix<double, 6, 4>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

using FrameId = std::int64_t;
using FeatureId = std::int64_t;

// Numerical thresholds shared across modules.
namespace tol {
inline constexpr double kOrthogonality = 1e-9;  // |n.d| <= k |n||d|
inline constexpr double kDegenerate = 1e-12;     // vanishing vector norms
inline constexpr double kPixel = 1e-8;           // distinct normalized pixels
inline constexpr double kRay = 1e-9;             // ray/line incidence, relative
inline constexpr double kRotationOnly = 1e-10;   // plane offset of the anchor center
}  // namespace tol

enum class ErrorKind {
  kDegenerateLine,
  kNoIntersection,
  kBehindCamera,
  kDegenerateProjection,
  kDegenerateObservation,
  kInvalidArgument,
  kMissingState,
  kLengthMismatch,
  kConfig,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lineba
