#include <gtest/gtest.h>

#include "lineba/residuals.h"
#include "support.h"

namespace lineba {
namespace {

using testing::central_difference;
using testing::near_identity_pose;
using testing::pose_plus;
using testing::relative_error;
using testing::Rng;
using testing::uniform;
using testing::uniform_vec3;
using testing::unit6;

// Anchor and observing cameras looking down +z at a segment 3-7 units away.
struct LineScene {
  CameraPose pose_i, pose_j, extrinsic;
  Vec3 a, b;  // world points on the line
  InverseDepthLine anchored{1.0, 1.0, {0, 0}, {1, 0}};

  CameraPose cam_i() const { return pose_i * extrinsic; }
  CameraPose cam_j() const { return pose_j * extrinsic; }
};

LineScene random_line_scene(Rng& rng, bool with_extrinsic = true) {
  for (;;) {
    LineScene s;
    s.pose_i = near_identity_pose(rng, 0.2, 0.5);
    s.pose_j = near_identity_pose(rng, 0.2, 0.5);
    s.extrinsic = with_extrinsic ? near_identity_pose(rng, 0.1, 0.1) : CameraPose{};
    s.a = Vec3(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 3, 7));
    s.b = Vec3(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 3, 7));
    const Vec3 ai = s.cam_i().inverse() * s.a;
    const Vec3 bi = s.cam_i().inverse() * s.b;
    const Vec3 aj = s.cam_j().inverse() * s.a;
    const Vec3 bj = s.cam_j().inverse() * s.b;
    if (ai.z() < 1 || bi.z() < 1 || aj.z() < 1 || bj.z() < 1) continue;
    if ((ai.hnormalized() - bi.hnormalized()).norm() < 0.1) continue;
    if ((aj.hnormalized() - bj.hnormalized()).norm() < 0.1) continue;
    s.anchored = InverseDepthLine(1.0 / ai.z(), 1.0 / bi.z(), ai.hnormalized(), bi.hnormalized());
    return s;
  }
}

// Observation of the scene's line in camera j at line parameters (ts, te),
// plus an optional offset perpendicular-ish to make the residual nonzero.
LineObservation observe_j(const LineScene& s, double ts, double te, const Vec2& offset_s = {0, 0},
                          const Vec2& offset_e = {0, 0}) {
  const Vec3 ps = s.cam_j().inverse() * (s.a + ts * (s.b - s.a));
  const Vec3 pe = s.cam_j().inverse() * (s.a + te * (s.b - s.a));
  return {1, ps.hnormalized() + offset_s, pe.hnormalized() + offset_e};
}

// Signed distances from first principles, up to a common sign.
Vec2 oracle_residual(const LineScene& s, const LineObservation& obs) {
  const Vec3 pa = (s.cam_j().inverse() * s.a);
  const Vec3 pb = (s.cam_j().inverse() * s.b);
  const Vec3 l = testing::cross(pa / pa.z(), pb / pb.z());
  const double n = std::hypot(l.x(), l.y());
  return {obs.s_obs.homogeneous().dot(l) / n, obs.e_obs.homogeneous().dot(l) / n};
}

double up_to_sign(const Vec2& r, const Vec2& oracle) {
  return std::min((r - oracle).norm(), (r + oracle).norm());
}

TEST(ProjectLine, UnitIntrinsics) {
  ProjectedLine p = project_line({{0, 1, 0}, {1, 0, 0}}, CameraIntrinsics::unit());
  EXPECT_LT((p.l - Vec3(0, 1, 0)).norm(), 1e-15);
}

TEST(ProjectLine, HandComputedIntrinsics) {
  CameraIntrinsics K{2.0, 3.0, 0.5, 0.25};
  ProjectedLine p = project_line({{1, 1, 1}, {1, -1, 0}}, K);
  EXPECT_LT((p.l - Vec3(3, 2, 4)).norm(), 1e-15);
}

TEST(ProjectLine, MatchesIndependentMatrix) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    CameraIntrinsics K{uniform(rng, 100, 800), uniform(rng, 100, 800), uniform(rng, 0, 400),
                       uniform(rng, 0, 300)};
    Vec3 n = uniform_vec3(rng, -1, 1);
    Mat3 kl = Mat3::Zero();
    kl(0, 0) = K.fy;
    kl(1, 1) = K.fx;
    kl(2, 0) = -K.fy * K.cx;
    kl(2, 1) = -K.fx * K.cy;
    kl(2, 2) = K.fx * K.fy;
    ProjectedLine p = project_line({n, n.unitOrthogonal()}, K);
    EXPECT_LT((p.l - kl * n).norm(), 1e-9 * (kl * n).norm());
  }
}

TEST(ProjectLine, PointProjectionIsDegenerate) {
  // Line through the camera center: n = 0.
  try {
    project_line({{0, 0, 0}, {0, 0, 1}}, CameraIntrinsics::unit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateProjection);
  }
}

TEST(LineResidual, DistanceToImageXAxis) {
  InverseDepthLine x_axis(1.0, 1.0, {0, 0}, {1, 0});
  LineObservation obs{1, {0.3, 0.2}, {-0.1, -0.5}};
  Vec2 r = line_residual(x_axis, {}, {}, {}, obs, CameraIntrinsics::unit());
  EXPECT_LT((r - Vec2(0.2, -0.5)).norm(), 1e-15);
}

TEST(LineResidual, ZeroOnTrueProjection) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, 0.0, 1.0);
    Vec2 r = line_residual(s.anchored, s.pose_i, s.pose_j, s.extrinsic, obs,
                           CameraIntrinsics::unit());
    EXPECT_LT(r.norm(), 1e-12);
  }
}

TEST(LineResidual, MatchesTwoPointOracle) {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, uniform(rng, -0.3, 0.4), uniform(rng, 0.6, 1.3),
                                    Vec2(uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02)),
                                    Vec2(uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02)));
    Vec2 r = line_residual(s.anchored, s.pose_i, s.pose_j, s.extrinsic, obs,
                           CameraIntrinsics::unit());
    EXPECT_LT(up_to_sign(r, oracle_residual(s, obs)), 1e-10);
  }
}

TEST(LineResidual, CommonEndVerticesNotNeeded) {
  Rng rng(10);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, uniform(rng, -0.5, 0.5), uniform(rng, 0.5, 1.5));
    Vec2 r = line_residual(s.anchored, s.pose_i, s.pose_j, s.extrinsic, obs,
                           CameraIntrinsics::unit());
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(LineResidual, InvariantToPluckerScale) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, 0.1, 0.9, {0.01, -0.02}, {0.03, 0.01});
    PluckerLine lj = line_in_observing_frame(plucker_from_inverse_depth(s.anchored), s.pose_i,
                                             s.pose_j, s.extrinsic);
    const double k = uniform(rng, 0.01, 100);
    PluckerLine scaled(k * lj.n, k * lj.d);
    Vec2 a = residual_from_image_line(project_line(lj, CameraIntrinsics::unit()).l, obs);
    Vec2 b = residual_from_image_line(project_line(scaled, CameraIntrinsics::unit()).l, obs);
    EXPECT_LT((a - b).norm(), 1e-12);
  }
}

TEST(LineResidual, SlidingEndpointsAlongImageLine) {
  InverseDepthLine x_axis(1.0, 1.0, {0, 0}, {1, 0});
  LineObservation a{1, {0.3, 0.2}, {-0.1, -0.5}};
  LineObservation b{1, {1.7, 0.2}, {-3.0, -0.5}};
  Vec2 ra = line_residual(x_axis, {}, {}, {}, a, CameraIntrinsics::unit());
  Vec2 rb = line_residual(x_axis, {}, {}, {}, b, CameraIntrinsics::unit());
  EXPECT_LT((ra - rb).norm(), 1e-15);
}

TEST(LineJacobians, ImageLineDerivativeAtZeroResidual) {
  const Vec3 l(0.3, -0.4, 0.2);
  // Endpoints on the line l.x u + l.y v + l.z = 0.
  LineObservation obs{1, {0.0, 0.5}, {-2.0 / 3.0, 0.0}};
  ASSERT_LT(residual_from_image_line(l, obs).norm(), 1e-15);
  Mat23 j = d_residual_d_image_line(l, obs);
  EXPECT_LT((j.row(0).transpose() - obs.s_obs.homogeneous() / 0.5).norm(), 1e-15);
  EXPECT_LT((j.row(1).transpose() - obs.e_obs.homogeneous() / 0.5).norm(), 1e-15);
}

TEST(LineJacobians, MatchFiniteDifferences) {
  Rng rng(14);
  CameraIntrinsics K = CameraIntrinsics::unit();
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, 0.1, 0.8, {0.01, -0.01}, {-0.02, 0.015});
    LineJacobians J = line_jacobians(s.anchored, s.pose_i, s.pose_j, s.extrinsic, obs, K);
    auto res = [&](const CameraPose& pi, const CameraPose& pj, const CameraPose& ex,
                   const InverseDepthLine& l) -> VecX {
      return line_residual(l, pi, pj, ex, obs, K);
    };
    EXPECT_LT((J.residual - res(s.pose_i, s.pose_j, s.extrinsic, s.anchored)).norm(), 1e-15);
    MatX fd_i = central_difference(2, 6, [&](int k, double h) {
      return res(pose_plus(s.pose_i, unit6(k, h)), s.pose_j, s.extrinsic, s.anchored);
    });
    MatX fd_j = central_difference(2, 6, [&](int k, double h) {
      return res(s.pose_i, pose_plus(s.pose_j, unit6(k, h)), s.extrinsic, s.anchored);
    });
    MatX fd_x = central_difference(2, 6, [&](int k, double h) {
      return res(s.pose_i, s.pose_j, pose_plus(s.extrinsic, unit6(k, h)), s.anchored);
    });
    MatX fd_l = central_difference(2, 2, [&](int k, double h) {
      Vec2 lam = s.anchored.inverse_depths();
      lam[k] += h;
      return res(s.pose_i, s.pose_j, s.extrinsic, s.anchored.with_inverse_depths(lam[0], lam[1]));
    });
    worst = std::max({worst, relative_error(J.d_pose_anchor, fd_i),
                      relative_error(J.d_pose_obs, fd_j), relative_error(J.d_extrinsic, fd_x),
                      relative_error(J.d_lambda, fd_l)});
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(LineJacobians, InverseDepthOnlyIdentityPoses) {
  // Camera j = camera i shifted along x; residual as an explicit function of
  // the two inverse depths.
  const Vec2 as(-0.2, 0.1), ae(0.3, -0.15);
  const CameraPose pj{Mat3::Identity(), {0.4, 0.1, 0.0}};
  LineObservation obs{1, {-0.5, 0.2}, {0.1, 0.05}};
  auto r = [&](double ls, double le) {
    // Endpoints in camera j, projected, then the line through them.
    const Vec3 S = as.homogeneous() / ls - pj.t;
    const Vec3 E = ae.homogeneous() / le - pj.t;
    const Vec3 l = testing::cross(S, E);
    const double n = std::hypot(l.x(), l.y());
    return Vec2(obs.s_obs.homogeneous().dot(l) / n, obs.e_obs.homogeneous().dot(l) / n);
  };
  const double ls = 0.25, le = 0.2, h = 1e-6;
  Mat2 fd;
  fd.col(0) = (r(ls + h, le) - r(ls - h, le)) / (2 * h);
  fd.col(1) = (r(ls, le + h) - r(ls, le - h)) / (2 * h);
  LineJacobians J = line_jacobians({ls, le, as, ae}, {}, pj, {}, obs, CameraIntrinsics::unit());
  EXPECT_LT((J.residual - r(ls, le)).norm(), 1e-12);
  EXPECT_LT(relative_error(J.d_lambda, fd), 1e-6);
}

TEST(WorldLineJacobians, MatchFiniteDifferences) {
  Rng rng(16);
  CameraIntrinsics K = CameraIntrinsics::unit();
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    LineScene s = random_line_scene(rng);
    LineObservation obs = observe_j(s, 0.2, 0.7, {0.01, 0.0}, {0.0, -0.01});
    OrthonormalLine o = orthonormal_from_plucker(PluckerLine::through(s.a, s.b));
    WorldLineJacobians J = world_line_jacobians(o, s.pose_j, s.extrinsic, obs, K);
    MatX fd_j = central_difference(2, 6, [&](int k, double h) -> VecX {
      return world_line_residual(o, pose_plus(s.pose_j, unit6(k, h)), s.extrinsic, obs, K);
    });
    MatX fd_x = central_difference(2, 6, [&](int k, double h) -> VecX {
      return world_line_residual(o, s.pose_j, pose_plus(s.extrinsic, unit6(k, h)), obs, K);
    });
    MatX fd_o = central_difference(2, 4, [&](int k, double h) -> VecX {
      OrthonormalLine p = o;
      if (k < 3) {
        p.theta3 = Vec3::Zero();
        const CameraPose u = pose_plus({o.U(), Vec3::Zero()}, unit6(k + 3, h));
        Eigen::AngleAxisd aa(u.R);
        p.theta3 = aa.angle() * aa.axis();
      } else {
        p.theta1 += h;
      }
      return world_line_residual(p, s.pose_j, s.extrinsic, obs, K);
    });
    worst = std::max({worst, relative_error(J.d_pose_obs, fd_j),
                      relative_error(J.d_extrinsic, fd_x), relative_error(J.d_orthonormal, fd_o)});
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(PointResidual, IdenticalPosesGiveZero) {
  Rng rng(18);
  for (int i = 0; i < 50; ++i) {
    CameraPose p = near_identity_pose(rng, 0.5, 2.0);
    CameraPose x = near_identity_pose(rng, 0.1, 0.1);
    Vec2 px(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    EXPECT_LT(point_residual(uniform(rng, 0.1, 1), px, p, p, x, px).norm(), 1e-14);
  }
}

TEST(PointResidual, TranslationAlongX) {
  CameraPose obs_pose{Mat3::Identity(), {1, 0, 0}};
  Vec2 r = point_residual(0.5, {0, 0}, {}, obs_pose, {}, {0, 0});
  EXPECT_LT((r - Vec2(-0.5, 0)).norm(), 1e-15);
}

TEST(PointResidual, BehindCamera) {
  CameraPose obs_pose{Mat3::Identity(), {0, 0, 3}};
  try {
    point_residual(0.5, {0, 0}, {}, obs_pose, {}, {0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBehindCamera);
  }
}

TEST(PointJacobians, MatchFiniteDifferences) {
  Rng rng(20);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    CameraPose pi = near_identity_pose(rng, 0.2, 0.5);
    CameraPose pj = near_identity_pose(rng, 0.2, 0.5);
    CameraPose ex = near_identity_pose(rng, 0.1, 0.1);
    Vec2 anchor(uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4));
    double rho = uniform(rng, 0.15, 0.3);
    Vec2 obs(uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4));
    auto res = [&](const CameraPose& a, const CameraPose& b, const CameraPose& c,
                   double inv) -> VecX { return point_residual(inv, anchor, a, b, c, obs); };
    PointJacobians J = point_jacobians(rho, anchor, pi, pj, ex, obs);
    MatX fd_i = central_difference(2, 6, [&](int k, double h) {
      return res(pose_plus(pi, unit6(k, h)), pj, ex, rho);
    });
    MatX fd_j = central_difference(2, 6, [&](int k, double h) {
      return res(pi, pose_plus(pj, unit6(k, h)), ex, rho);
    });
    MatX fd_x = central_difference(2, 6, [&](int k, double h) {
      return res(pi, pj, pose_plus(ex, unit6(k, h)), rho);
    });
    MatX fd_r = central_difference(2, 1, [&](int, double h) { return res(pi, pj, ex, rho + h); });
    worst = std::max({worst, relative_error(J.d_pose_anchor, fd_i),
                      relative_error(J.d_pose_obs, fd_j), relative_error(J.d_extrinsic, fd_x),
                      relative_error(J.d_inv_depth, fd_r)});
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(OdometryResidual, ExactMeasurementIsZero) {
  Rng rng(22);
  for (int i = 0; i < 50; ++i) {
    CameraPose a = testing::random_pose(rng, 2.0);
    CameraPose b = testing::random_pose(rng, 2.0);
    OdometryFactor f{0, 1, a.inverse() * b, Mat6::Identity()};
    EXPECT_LT(odometry_residual(f, a, b).norm(), 1e-12);
  }
}

TEST(OdometryResidual, TranslationOffset) {
  const double delta = 0.37;
  CameraPose a{Mat3::Identity(), {1, 2, 3}};
  CameraPose b{Mat3::Identity(), {1 + delta, 2, 3}};
  OdometryFactor f{0, 1, CameraPose{}, Mat6::Identity()};
  Vec6 r = odometry_residual(f, a, b);
  EXPECT_LT((r.head<3>() - Vec3(delta, 0, 0)).norm(), 1e-15);
  EXPECT_LT(r.tail<3>().norm(), 1e-15);
}

TEST(OdometryJacobians, MatchFiniteDifferences) {
  Rng rng(24);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    CameraPose a = testing::random_pose(rng, 2.0);
    CameraPose b = pose_plus(a, (Vec6() << uniform_vec3(rng, -1, 1), uniform_vec3(rng, -0.3, 0.3)).finished());
    CameraPose meas = pose_plus(a.inverse() * b, (Vec6() << uniform_vec3(rng, -0.05, 0.05),
                                                  uniform_vec3(rng, -0.05, 0.05)).finished());
    Mat6 s = Mat6::Identity();
    for (int k = 0; k < 36; ++k) s(k / 6, k % 6) += uniform(rng, -0.1, 0.1);
    OdometryFactor f{0, 1, meas, s};
    OdometryJacobians J = odometry_jacobians(f, a, b);
    MatX fd_a = central_difference(6, 6, [&](int k, double h) -> VecX {
      return odometry_residual(f, pose_plus(a, unit6(k, h)), b);
    });
    MatX fd_b = central_difference(6, 6, [&](int k, double h) -> VecX {
      return odometry_residual(f, a, pose_plus(b, unit6(k, h)));
    });
    worst = std::max({worst, relative_error(J.d_pose_i, fd_a), relative_error(J.d_pose_j, fd_b)});
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(OdometryJacobians, ClosedFormAtZeroResidual) {
  // At an exact measurement: J_j = S [[Rm^T Ri^T, 0], [0, I]] and
  // J_i = S [[-Rm^T Ri^T, Rm^T [dt]x], [0, -Rm^T]].
  Rng rng(26);
  for (int i = 0; i < 50; ++i) {
    CameraPose a = testing::random_pose(rng, 2.0);
    CameraPose b = testing::random_pose(rng, 2.0);
    CameraPose m = a.inverse() * b;
    Mat6 s = Mat6::Identity() * 3.0;
    OdometryJacobians J = odometry_jacobians({0, 1, m, s}, a, b);
    Mat6 ji = Mat6::Zero(), jj = Mat6::Zero();
    const Mat3 rmt = m.R.transpose();
    jj.topLeftCorner<3, 3>() = rmt * a.R.transpose();
    jj.bottomRightCorner<3, 3>() = Mat3::Identity();
    ji.topLeftCorner<3, 3>() = -rmt * a.R.transpose();
    ji.topRightCorner<3, 3>() = rmt * so3::hat(m.t);
    ji.bottomRightCorner<3, 3>() = -rmt;
    EXPECT_LT((J.d_pose_j - s * jj).norm(), 1e-10);
    EXPECT_LT((J.d_pose_i - s * ji).norm(), 1e-10);
  }
}

}  // namespace
}  // namespace lineba
