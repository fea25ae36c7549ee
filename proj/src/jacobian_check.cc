#include "lineba/jacobian_check.h"

#include <functional>
#include <map>
#include <random>

#include "lineba/residuals.h"

namespace lineba {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 gaussian3(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng), n(rng)};
}

CameraPose random_pose(Rng& rng, double rotation, double translation) {
  return {so3::exp(rotation * gaussian3(rng)), translation * gaussian3(rng)};
}

// Central differences of f around x along the given increment function.
template <typename F>
MatX numeric(const F& f, int dim, double h) {
  const VecX f0 = f(VecX::Zero(dim));
  MatX J(f0.size(), dim);
  for (int k = 0; k < dim; ++k) {
    VecX d = VecX::Zero(dim);
    d[k] = h;
    J.col(k) = (f(d) - f(-d)) / (2.0 * h);
  }
  return J;
}

double relative_error(const MatX& analytic, const MatX& fd) {
  return (analytic - fd).norm() / std::max(fd.norm(), 1e-8);
}

struct Config {
  CameraIntrinsics K;
  CameraPose pose_anchor;
  CameraPose pose_obs;
  CameraPose extrinsic;
  InverseDepthLine line{1.0, 1.0, Vec2::Zero(), Vec2::UnitX()};
  OrthonormalLine line_world;
  LineObservation obs;
  double point_inv_depth = 1.0;
  Vec2 point_anchor = Vec2::Zero();
  Vec2 point_obs = Vec2::Zero();
  OdometryFactor odometry;
};

// A line (and point) in front of two cameras with a non-degenerate image.
Config random_config(Rng& rng) {
  for (;;) {
    Config c;
    c.K = {uniform(rng, 300, 600), uniform(rng, 300, 600), uniform(rng, 200, 400),
           uniform(rng, 150, 300)};
    c.extrinsic = random_pose(rng, 0.1, 0.05);
    c.pose_anchor = random_pose(rng, 0.5, 1.0);
    const CameraPose rel_cam = random_pose(rng, 0.1, 0.3);
    const CameraPose cam_obs = c.pose_anchor * c.extrinsic * rel_cam;
    c.pose_obs = cam_obs * c.extrinsic.inverse();

    const Vec2 s(uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4));
    const Vec2 e(uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4));
    if ((s - e).norm() < 0.1) continue;
    c.line = InverseDepthLine(uniform(rng, 0.1, 0.5), uniform(rng, 0.1, 0.5), s, e);

    // Observed endpoints: projections of the 3D endpoints, nudged off the line.
    const CameraPose to_obs = rel_cam.inverse();
    const Vec3 S = to_obs * c.line.start_point();
    const Vec3 E = to_obs * c.line.end_point();
    if (S.z() < 0.5 || E.z() < 0.5) continue;
    c.obs = {1, S.head<2>() / S.z() + 0.01 * gaussian3(rng).head<2>(),
             E.head<2>() / E.z() + 0.01 * gaussian3(rng).head<2>()};
    if (!c.obs.is_valid()) continue;
    const PluckerLine l_obs = invert_transform_line(plucker_from_inverse_depth(c.line), rel_cam);
    const Vec3 l = c.K.line_projection_matrix() * l_obs.n;
    if (l.head<2>().norm() < 1e-3 * l.norm()) continue;
    c.line_world = orthonormal_from_plucker(
        transform_line(plucker_from_inverse_depth(c.line), c.pose_anchor * c.extrinsic));

    c.point_anchor = Vec2(uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.4));
    c.point_inv_depth = uniform(rng, 0.1, 0.5);
    const Vec3 P = to_obs * (c.point_anchor.homogeneous() / c.point_inv_depth);
    if (P.z() < 0.5) continue;
    c.point_obs = P.head<2>() / P.z() + 0.01 * gaussian3(rng).head<2>();

    c.odometry.frame_i = 0;
    c.odometry.frame_j = 1;
    c.odometry.rel_pose_meas = relative(c.pose_anchor, c.pose_obs) * random_pose(rng, 0.05, 0.05);
    Mat6 a;
    for (int k = 0; k < 36; ++k) a(k / 6, k % 6) = uniform(rng, -1.0, 1.0);
    c.odometry.sqrt_info = a.transpose() * a + Mat6::Identity();
    return c;
  }
}

Vec6 as_vec(const PluckerLine& l) { return l.vector(); }

}  // namespace

std::vector<JacobianBlockCheck> run_jacobian_checks(const JacobianCheckOptions& options) {
  Rng rng(options.seed);
  const double h = options.step;
  std::vector<JacobianBlockCheck> checks;
  std::map<std::string, std::size_t> index;
  const auto record = [&](const std::string& name, const MatX& analytic, const MatX& fd) {
    auto [it, fresh] = index.try_emplace(name, checks.size());
    if (fresh) checks.push_back({name, 0, 0.0});
    JacobianBlockCheck& c = checks[it->second];
    ++c.configurations;
    c.max_relative_error = std::max(c.max_relative_error, relative_error(analytic, fd));
  };

  for (int n = 0; n < options.configurations; ++n) {
    const Config c = random_config(rng);
    const CameraPose cam_anchor = c.pose_anchor * c.extrinsic;
    const PluckerLine L = plucker_from_inverse_depth(c.line);
    const CameraIntrinsics& K = c.K;

    // Image line -> residual; l carries pixel-scale magnitudes, so the step
    // is relative.
    const Vec3 l = K.line_projection_matrix() *
                   line_in_observing_frame(L, c.pose_anchor, c.pose_obs, c.extrinsic).n;
    record("dr/dl", d_residual_d_image_line(l, c.obs),
           numeric([&](const VecX& d) -> VecX {
             return residual_from_image_line(l + d.head<3>(), c.obs);
           }, 3, h * std::max(1.0, l.norm())));

    // Plücker -> image line.
    record("dl/dL", d_image_line_d_plucker(K), numeric([&](const VecX& d) -> VecX {
             return K.line_projection_matrix() * (L.n + d.head<3>());
           }, 6, h));

    // Line motion with respect to the pose tangent.
    record("dL'/d(dt,dtheta) forward", d_transform_d_pose(L, cam_anchor),
           numeric([&](const VecX& d) -> VecX {
             return as_vec(transform_line(L, cam_anchor.plus(d)));
           }, 6, h));
    record("dL'/d(dt,dtheta) inverse", d_inverse_transform_d_pose(L, cam_anchor),
           numeric([&](const VecX& d) -> VecX {
             return as_vec(invert_transform_line(L, cam_anchor.plus(d)));
           }, 6, h));

    // Parameterizations.
    record("dL/dlambda", d_plucker_d_inverse_depth(c.line), numeric([&](const VecX& d) -> VecX {
             return as_vec(plucker_from_inverse_depth(c.line.with_inverse_depths(
                 c.line.lambda_s() + d[0], c.line.lambda_e() + d[1])));
           }, 2, h));
    record("dL/d(orthonormal)", d_plucker_d_orthonormal(c.line_world),
           numeric([&](const VecX& d) -> VecX {
             return as_vec(plucker_from_orthonormal(c.line_world.plus(d.head<4>())));
           }, 4, h));

    // Full anchored line factor.
    const LineJacobians lj = line_jacobians(c.line, c.pose_anchor, c.pose_obs, c.extrinsic, c.obs, K);
    const auto line_r = [&](const InverseDepthLine& line, const CameraPose& pa, const CameraPose& po,
                            const CameraPose& ex) -> VecX {
      return line_residual(line, pa, po, ex, c.obs, K);
    };
    record("line dr/d(anchor pose)", lj.d_pose_anchor, numeric([&](const VecX& d) -> VecX {
             return line_r(c.line, c.pose_anchor.plus(d), c.pose_obs, c.extrinsic);
           }, 6, h));
    record("line dr/d(observing pose)", lj.d_pose_obs, numeric([&](const VecX& d) -> VecX {
             return line_r(c.line, c.pose_anchor, c.pose_obs.plus(d), c.extrinsic);
           }, 6, h));
    record("line dr/d(extrinsic)", lj.d_extrinsic, numeric([&](const VecX& d) -> VecX {
             return line_r(c.line, c.pose_anchor, c.pose_obs, c.extrinsic.plus(d));
           }, 6, h));
    record("line dr/dlambda", lj.d_lambda, numeric([&](const VecX& d) -> VecX {
             return line_r(c.line.with_inverse_depths(c.line.lambda_s() + d[0],
                                                      c.line.lambda_e() + d[1]),
                           c.pose_anchor, c.pose_obs, c.extrinsic);
           }, 2, h));

    // World-frame orthonormal line factor.
    const WorldLineJacobians wj =
        world_line_jacobians(c.line_world, c.pose_obs, c.extrinsic, c.obs, K);
    record("world line dr/d(observing pose)", wj.d_pose_obs, numeric([&](const VecX& d) -> VecX {
             return world_line_residual(c.line_world, c.pose_obs.plus(d), c.extrinsic, c.obs, K);
           }, 6, h));
    record("world line dr/d(extrinsic)", wj.d_extrinsic, numeric([&](const VecX& d) -> VecX {
             return world_line_residual(c.line_world, c.pose_obs, c.extrinsic.plus(d), c.obs, K);
           }, 6, h));
    record("world line dr/d(orthonormal)", wj.d_orthonormal, numeric([&](const VecX& d) -> VecX {
             return world_line_residual(c.line_world.plus(d.head<4>()), c.pose_obs, c.extrinsic,
                                        c.obs, K);
           }, 4, h));

    // Point factor.
    const PointJacobians pj = point_jacobians(c.point_inv_depth, c.point_anchor, c.pose_anchor,
                                              c.pose_obs, c.extrinsic, c.point_obs);
    const auto point_r = [&](double rho, const CameraPose& pa, const CameraPose& po,
                             const CameraPose& ex) -> VecX {
      return point_residual(rho, c.point_anchor, pa, po, ex, c.point_obs);
    };
    record("point dr/d(anchor pose)", pj.d_pose_anchor, numeric([&](const VecX& d) -> VecX {
             return point_r(c.point_inv_depth, c.pose_anchor.plus(d), c.pose_obs, c.extrinsic);
           }, 6, h));
    record("point dr/d(observing pose)", pj.d_pose_obs, numeric([&](const VecX& d) -> VecX {
             return point_r(c.point_inv_depth, c.pose_anchor, c.pose_obs.plus(d), c.extrinsic);
           }, 6, h));
    record("point dr/d(extrinsic)", pj.d_extrinsic, numeric([&](const VecX& d) -> VecX {
             return point_r(c.point_inv_depth, c.pose_anchor, c.pose_obs, c.extrinsic.plus(d));
           }, 6, h));
    record("point dr/d(inverse depth)", pj.d_inv_depth, numeric([&](const VecX& d) -> VecX {
             return point_r(c.point_inv_depth + d[0], c.pose_anchor, c.pose_obs, c.extrinsic);
           }, 1, h));

    // Odometry factor.
    const OdometryJacobians oj = odometry_jacobians(c.odometry, c.pose_anchor, c.pose_obs);
    record("odometry dr/d(pose i)", oj.d_pose_i, numeric([&](const VecX& d) -> VecX {
             return odometry_residual(c.odometry, c.pose_anchor.plus(d), c.pose_obs);
           }, 6, h));
    record("odometry dr/d(pose j)", oj.d_pose_j, numeric([&](const VecX& d) -> VecX {
             return odometry_residual(c.odometry, c.pose_anchor, c.pose_obs.plus(d));
           }, 6, h));
  }
  return checks;
}

}  // namespace lineba
