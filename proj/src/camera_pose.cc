#include "lineba/camera_pose.h"

namespace lineba {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegenerateLine: return "degenerate line";
    case ErrorKind::kNoIntersection: return "no intersection";
    case ErrorKind::kBehindCamera: return "behind camera";
    case ErrorKind::kDegenerateProjection: return "degenerate projection";
    case ErrorKind::kDegenerateObservation: return "degenerate observation";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kMissingState: return "missing state";
    case ErrorKind::kLengthMismatch: return "length mismatch";
    case ErrorKind::kConfig: return "config error";
  }
  return "unknown error";
}

CameraPose CameraPose::checked(const Mat3& rotation, const Vec3& translation) {
  CameraPose pose(rotation, translation);
  if (!pose.is_valid()) {
    throw Error(ErrorKind::kInvalidArgument, "pose rotation is not in SO(3)");
  }
  return pose;
}

bool CameraPose::is_valid(double tolerance) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const double orth = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tolerance && std::abs(R.determinant() - 1.0) <= tolerance;
}

Vec6 CameraPose::minus(const CameraPose& other) const {
  Vec6 delta;
  delta.head<3>() = other.t - t;
  delta.tail<3>() = so3::log(R.transpose() * other.R);
  return delta;
}

}  // namespace lineba
