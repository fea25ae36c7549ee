#include "lineba/residuals.h"

namespace lineba {

using so3::hat;

Mat3 CameraIntrinsics::line_projection_matrix() const {
  Mat3 k;
  k << fy, 0.0, 0.0,
       0.0, fx, 0.0,
       -fy * cx, -fx * cy, fx * fy;
  return k;
}

ProjectedLine project_line(const PluckerLine& line_in_frame, const CameraIntrinsics& K) {
  ProjectedLine out{K.line_projection_matrix() * line_in_frame.n};
  if (out.l.head<2>().norm() <= tol::kDegenerate * out.l.norm() || !out.l.allFinite()) {
    throw Error(ErrorKind::kDegenerateProjection, "line projects to a point");
  }
  return out;
}

Mat36 d_image_line_d_plucker(const CameraIntrinsics& K) {
  Mat36 j = Mat36::Zero();
  j.leftCols<3>() = K.line_projection_matrix();
  return j;
}

Vec2 residual_from_image_line(const Vec3& l, const LineObservation& obs) {
  const double norm = l.head<2>().norm();
  return {obs.s_obs.homogeneous().dot(l) / norm, obs.e_obs.homogeneous().dot(l) / norm};
}

Mat23 d_residual_d_image_line(const Vec3& l, const LineObservation& obs) {
  const double n2 = l.head<2>().squaredNorm();
  const double norm = std::sqrt(n2);
  const Vec3 ln(l.x(), l.y(), 0.0);
  Mat23 j;
  const Vec3 s = obs.s_obs.homogeneous();
  const Vec3 e = obs.e_obs.homogeneous();
  j.row(0) = (s / norm - s.dot(l) * ln / (n2 * norm)).transpose();
  j.row(1) = (e / norm - e.dot(l) * ln / (n2 * norm)).transpose();
  return j;
}

PluckerLine line_in_observing_frame(const PluckerLine& line_anchor, const CameraPose& pose_anchor,
                                    const CameraPose& pose_obs, const CameraPose& extrinsic) {
  const PluckerLine body_i = transform_line(line_anchor, extrinsic);
  const PluckerLine world = transform_line(body_i, pose_anchor);
  const PluckerLine body_j = invert_transform_line(world, pose_obs);
  return invert_transform_line(body_j, extrinsic);
}

namespace {

// Residual and Jacobians with respect to the anchor-frame Plücker vector and
// the three poses involved.
struct AnchoredChain {
  Vec2 residual;
  Eigen::Matrix<double, 2, 6> d_line;
  Mat26 d_pose_anchor;
  Mat26 d_pose_obs;
  Mat26 d_extrinsic;
};

AnchoredChain anchored_chain(const PluckerLine& line_c_i, const CameraPose& pose_i,
                             const CameraPose& pose_j, const CameraPose& ext,
                             const LineObservation& obs, const CameraIntrinsics& K) {
  const PluckerLine line_b_i = transform_line(line_c_i, ext);
  const PluckerLine line_w = transform_line(line_b_i, pose_i);
  const PluckerLine line_b_j = invert_transform_line(line_w, pose_j);
  const PluckerLine line_c_j = invert_transform_line(line_b_j, ext);

  const ProjectedLine proj = project_line(line_c_j, K);
  AnchoredChain out;
  out.residual = residual_from_image_line(proj.l, obs);
  const Eigen::Matrix<double, 2, 6> dr_dl =
      d_residual_d_image_line(proj.l, obs) * d_image_line_d_plucker(K);

  const Mat6 m_cb = inverse_line_motion_matrix(ext);
  const Mat6 m_bw = inverse_line_motion_matrix(pose_j);
  const Mat6 m_wb = line_motion_matrix(pose_i);
  const Mat6 m_bc = line_motion_matrix(ext);

  const Eigen::Matrix<double, 2, 6> dr_dw = dr_dl * m_cb * m_bw;
  out.d_line = dr_dw * m_wb * m_bc;
  out.d_pose_anchor = dr_dw * d_transform_d_pose(line_b_i, pose_i);
  out.d_pose_obs = dr_dl * m_cb * d_inverse_transform_d_pose(line_w, pose_j);
  out.d_extrinsic = dr_dw * m_wb * d_transform_d_pose(line_c_i, ext) +
                    dr_dl * d_inverse_transform_d_pose(line_b_j, ext);
  return out;
}

}  // namespace

Vec2 line_residual(const InverseDepthLine& line_anchor, const CameraPose& pose_anchor,
                   const CameraPose& pose_obs, const CameraPose& extrinsic,
                   const LineObservation& obs, const CameraIntrinsics& K) {
  const PluckerLine line_c_j = line_in_observing_frame(plucker_from_inverse_depth(line_anchor),
                                                       pose_anchor, pose_obs, extrinsic);
  return residual_from_image_line(project_line(line_c_j, K).l, obs);
}

LineJacobians line_jacobians(const InverseDepthLine& line_anchor, const CameraPose& pose_anchor,
                             const CameraPose& pose_obs, const CameraPose& extrinsic,
                             const LineObservation& obs, const CameraIntrinsics& K) {
  const AnchoredChain chain = anchored_chain(plucker_from_inverse_depth(line_anchor), pose_anchor,
                                             pose_obs, extrinsic, obs, K);
  LineJacobians out;
  out.residual = chain.residual;
  out.d_pose_anchor = chain.d_pose_anchor;
  out.d_pose_obs = chain.d_pose_obs;
  out.d_extrinsic = chain.d_extrinsic;
  out.d_lambda = chain.d_line * d_plucker_d_inverse_depth(line_anchor);
  return out;
}

Vec2 world_line_residual(const OrthonormalLine& line_world, const CameraPose& pose_obs,
                         const CameraPose& extrinsic, const LineObservation& obs,
                         const CameraIntrinsics& K) {
  const PluckerLine line_b = invert_transform_line(plucker_from_orthonormal(line_world), pose_obs);
  const PluckerLine line_c = invert_transform_line(line_b, extrinsic);
  return residual_from_image_line(project_line(line_c, K).l, obs);
}

WorldLineJacobians world_line_jacobians(const OrthonormalLine& line_world,
                                        const CameraPose& pose_obs, const CameraPose& extrinsic,
                                        const LineObservation& obs, const CameraIntrinsics& K) {
  const PluckerLine line_w = plucker_from_orthonormal(line_world);
  const PluckerLine line_b = invert_transform_line(line_w, pose_obs);
  const PluckerLine line_c = invert_transform_line(line_b, extrinsic);
  const ProjectedLine proj = project_line(line_c, K);

  WorldLineJacobians out;
  out.residual = residual_from_image_line(proj.l, obs);
  const Eigen::Matrix<double, 2, 6> dr_dl =
      d_residual_d_image_line(proj.l, obs) * d_image_line_d_plucker(K);
  const Mat6 m_cb = inverse_line_motion_matrix(extrinsic);
  out.d_pose_obs = dr_dl * m_cb * d_inverse_transform_d_pose(line_w, pose_obs);
  out.d_extrinsic = dr_dl * d_inverse_transform_d_pose(line_b, extrinsic);
  out.d_orthonormal = dr_dl * m_cb * inverse_line_motion_matrix(pose_obs) *
                      d_plucker_d_orthonormal(line_world);
  return out;
}

namespace {

struct PointChain {
  Vec3 p_c_i, p_b_i, p_w, p_b_j, p_c_j;
};

PointChain point_chain(double inv_depth, const Vec2& anchor_pixel, const CameraPose& pose_i,
                       const CameraPose& pose_j, const CameraPose& ext) {
  PointChain c;
  c.p_c_i = anchor_pixel.homogeneous() / inv_depth;
  c.p_b_i = ext * c.p_c_i;
  c.p_w = pose_i * c.p_b_i;
  c.p_b_j = pose_j.R.transpose() * (c.p_w - pose_j.t);
  c.p_c_j = ext.R.transpose() * (c.p_b_j - ext.t);
  if (!(c.p_c_j.z() > tol::kDegenerate)) {
    throw Error(ErrorKind::kBehindCamera, "point reprojects behind the observing camera");
  }
  return c;
}

}  // namespace

Vec2 point_residual(double inv_depth, const Vec2& anchor_pixel, const CameraPose& pose_anchor,
                    const CameraPose& pose_obs, const CameraPose& extrinsic,
                    const Vec2& obs_pixel) {
  if (!(inv_depth > 0.0)) {
    throw Error(ErrorKind::kBehindCamera, "point inverse depth must be positive");
  }
  const PointChain c = point_chain(inv_depth, anchor_pixel, pose_anchor, pose_obs, extrinsic);
  return c.p_c_j.head<2>() / c.p_c_j.z() - obs_pixel;
}

PointJacobians point_jacobians(double inv_depth, const Vec2& anchor_pixel,
                               const CameraPose& pose_anchor, const CameraPose& pose_obs,
                               const CameraPose& extrinsic, const Vec2& obs_pixel) {
  if (!(inv_depth > 0.0)) {
    throw Error(ErrorKind::kBehindCamera, "point inverse depth must be positive");
  }
  const PointChain c = point_chain(inv_depth, anchor_pixel, pose_anchor, pose_obs, extrinsic);
  const double z = c.p_c_j.z();
  Mat23 dr_dp;
  dr_dp << 1.0 / z, 0.0, -c.p_c_j.x() / (z * z),
           0.0, 1.0 / z, -c.p_c_j.y() / (z * z);

  const Mat3 rbc_t = extrinsic.R.transpose();
  const Mat23 dr_dpw = dr_dp * rbc_t * pose_obs.R.transpose();

  PointJacobians out;
  out.residual = c.p_c_j.head<2>() / z - obs_pixel;
  out.d_pose_anchor.leftCols<3>() = dr_dpw;
  out.d_pose_anchor.rightCols<3>() = -dr_dpw * pose_anchor.R * hat(c.p_b_i);
  out.d_pose_obs.leftCols<3>() = -dr_dp * rbc_t * pose_obs.R.transpose();
  out.d_pose_obs.rightCols<3>() = dr_dp * rbc_t * hat(c.p_b_j);

  const Mat23 dr_dpbi = dr_dpw * pose_anchor.R;
  out.d_extrinsic.leftCols<3>() = dr_dpbi - dr_dp * rbc_t;
  out.d_extrinsic.rightCols<3>() = -dr_dpbi * extrinsic.R * hat(c.p_c_i) + dr_dp * hat(c.p_c_j);

  out.d_inv_depth = dr_dpbi * extrinsic.R * (-anchor_pixel.homogeneous() / (inv_depth * inv_depth));
  return out;
}

Vec6 odometry_residual(const OdometryFactor& factor, const CameraPose& pose_i,
                       const CameraPose& pose_j) {
  const CameraPose delta = relative(pose_i, pose_j);
  const CameraPose& meas = factor.rel_pose_meas;
  Vec6 r;
  r.head<3>() = meas.R.transpose() * (delta.t - meas.t);
  r.tail<3>() = so3::log(meas.R.transpose() * delta.R);
  return factor.sqrt_info * r;
}

OdometryJacobians odometry_jacobians(const OdometryFactor& factor, const CameraPose& pose_i,
                                     const CameraPose& pose_j) {
  const CameraPose& meas = factor.rel_pose_meas;
  const Mat3 rit = pose_i.R.transpose();
  const Mat3 m = rit * pose_j.R;
  const Vec3 dt = rit * (pose_j.t - pose_i.t);
  const Vec3 phi = so3::log(meas.R.transpose() * m);
  const Mat3 jr_inv = so3::right_jacobian_inverse(phi);

  Vec6 r;
  r.head<3>() = meas.R.transpose() * (dt - meas.t);
  r.tail<3>() = phi;

  Mat6 ji = Mat6::Zero();
  ji.block<3, 3>(0, 0) = -meas.R.transpose() * rit;
  ji.block<3, 3>(0, 3) = meas.R.transpose() * hat(dt);
  ji.block<3, 3>(3, 3) = -jr_inv * m.transpose();

  Mat6 jj = Mat6::Zero();
  jj.block<3, 3>(0, 0) = meas.R.transpose() * rit;
  jj.block<3, 3>(3, 3) = jr_inv;

  OdometryJacobians out;
  out.residual = factor.sqrt_info * r;
  out.d_pose_i = factor.sqrt_info * ji;
  out.d_pose_j = factor.sqrt_info * jj;
  return out;
}

}  // namespace lineba
