#include "lineba/metrics.h"

#include <cmath>

#include <Eigen/Geometry>

namespace lineba {

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].timestamp > samples_[i - 1].timestamp)) {
      throw Error(ErrorKind::kInvalidArgument, "trajectory timestamps must strictly increase");
    }
  }
}

Trajectory Trajectory::from_poses(std::span<const CameraPose> poses) {
  std::vector<TrajectorySample> samples;
  samples.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    samples.push_back({static_cast<double>(i), poses[i]});
  }
  return Trajectory(std::move(samples));
}

namespace {

void check_matching(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.size() != truth.size()) {
    throw Error(ErrorKind::kLengthMismatch, "trajectories differ in length: " +
                                                std::to_string(estimate.size()) + " vs " +
                                                std::to_string(truth.size()));
  }
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (estimate[i].timestamp != truth[i].timestamp) {
      throw Error(ErrorKind::kLengthMismatch,
                  "trajectory timestamps differ at index " + std::to_string(i));
    }
  }
}

}  // namespace

CameraPose align_positions(const Trajectory& estimate, const Trajectory& truth) {
  check_matching(estimate, truth);
  const Eigen::Index n = static_cast<Eigen::Index>(estimate.size());
  if (n < 3) {
    // Too few points to fix a rotation: translate the centroids onto each other.
    Vec3 shift = Vec3::Zero();
    for (Eigen::Index i = 0; i < n; ++i) shift += truth[i].pose.t - estimate[i].pose.t;
    return {Mat3::Identity(), n > 0 ? Vec3(shift / static_cast<double>(n)) : Vec3::Zero()};
  }
  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = estimate[i].pose.t;
    dst.col(i) = truth[i].pose.t;
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
  return {T.topLeftCorner<3, 3>(), T.topRightCorner<3, 1>()};
}

double ate_rmse(const Trajectory& estimate, const Trajectory& truth, bool align) {
  check_matching(estimate, truth);
  if (estimate.empty()) return 0.0;
  const CameraPose T = align ? align_positions(estimate, truth) : CameraPose::Identity();
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += (T * estimate[i].pose.t - truth[i].pose.t).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

RpeResult rpe(const Trajectory& estimate, const Trajectory& truth, int delta) {
  check_matching(estimate, truth);
  if (delta < 1) throw Error(ErrorKind::kInvalidArgument, "rpe delta must be >= 1");
  if (estimate.size() <= static_cast<std::size_t>(delta)) {
    throw Error(ErrorKind::kLengthMismatch, "trajectory shorter than rpe delta");
  }
  double sum_t = 0.0;
  double sum_r = 0.0;
  const std::size_t count = estimate.size() - static_cast<std::size_t>(delta);
  for (std::size_t i = 0; i < count; ++i) {
    const CameraPose q = relative(truth[i].pose, truth[i + delta].pose);
    const CameraPose p = relative(estimate[i].pose, estimate[i + delta].pose);
    const CameraPose e = q.inverse() * p;
    sum_t += e.t.squaredNorm();
    sum_r += so3::log(e.R).squaredNorm();
  }
  return {std::sqrt(sum_t / static_cast<double>(count)),
          std::sqrt(sum_r / static_cast<double>(count))};
}

}  // namespace lineba
