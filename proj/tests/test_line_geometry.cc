#include <gtest/gtest.h>

#include <numbers>

#include "lineba/line_geometry.h"
#include "support.h"

namespace lineba {
namespace {

using testing::cross;
using testing::line_error;
using testing::Rng;
using testing::uniform;
using testing::uniform_vec3;

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_LT((a - b).norm(), tol) << a.transpose() << " vs " << b.transpose();
}

void expect_error_kind(ErrorKind kind, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Two points in front of the origin camera with distinct projections.
struct FrontSegment {
  Vec3 s, e;
};

FrontSegment random_front_segment(Rng& rng) {
  for (;;) {
    Vec3 s(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 1, 8));
    Vec3 e(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, 1, 8));
    if ((s.hnormalized() - e.hnormalized()).norm() > 0.05 && (s - e).norm() > 0.3) return {s, e};
  }
}

TEST(PluckerFromInverseDepth, UnitDepths) {
  PluckerLine l = plucker_from_inverse_depth({1.0, 1.0, {0, 0}, {1, 0}});
  expect_vec_near(l.n, {0, 1, 0}, 1e-15);
  expect_vec_near(l.d, {1, 0, 0}, 1e-15);
}

TEST(PluckerFromInverseDepth, DoubledInverseDepths) {
  PluckerLine l = plucker_from_inverse_depth({2.0, 2.0, {0, 0}, {1, 0}});
  expect_vec_near(l.n, {0, 0.25, 0}, 1e-15);
  expect_vec_near(l.d, {0.5, 0, 0}, 1e-15);
}

TEST(PluckerFromInverseDepth, MixedDepthsMatchHandComputation) {
  const Vec3 S = Vec3(0.1, -0.2, 1.0) / 0.5;
  const Vec3 E = Vec3(0.3, 0.4, 1.0) / 0.25;
  PluckerLine l = plucker_from_inverse_depth({0.5, 0.25, {0.1, -0.2}, {0.3, 0.4}});
  expect_vec_near(l.n, cross(S, E), 1e-14);
  expect_vec_near(l.d, E - S, 1e-14);
  // (0.2, -0.4, 2) x (1.2, 1.6, 4)
  expect_vec_near(l.n, {-0.4 * 4 - 2 * 1.6, 2 * 1.2 - 0.2 * 4, 0.2 * 1.6 + 0.4 * 1.2}, 1e-14);
}

TEST(PluckerFromInverseDepth, KleinConstraintHolds) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    auto seg = random_front_segment(rng);
    InverseDepthLine id(1.0 / seg.s.z(), 1.0 / seg.e.z(), seg.s.hnormalized(),
                        seg.e.hnormalized());
    PluckerLine l = plucker_from_inverse_depth(id);
    EXPECT_LE(std::abs(l.n.dot(l.d)), 1e-10 * l.n.norm() * l.d.norm());
  }
}

TEST(PluckerFromInverseDepth, UniformRescaleScalesNAndD) {
  InverseDepthLine a(0.5, 0.25, {0.1, -0.2}, {0.3, 0.4});
  const double k = 3.0;
  PluckerLine la = plucker_from_inverse_depth(a);
  PluckerLine lb = plucker_from_inverse_depth(a.with_inverse_depths(k * 0.5, k * 0.25));
  expect_vec_near(lb.d, la.d / k, 1e-14);
  expect_vec_near(lb.n, la.n / (k * k), 1e-14);
}

TEST(InverseDepthLine, RejectsInvalidInput) {
  expect_error_kind(ErrorKind::kInvalidArgument, [] { InverseDepthLine(0.0, 1.0, {0, 0}, {1, 0}); });
  expect_error_kind(ErrorKind::kInvalidArgument, [] { InverseDepthLine(1.0, -1.0, {0, 0}, {1, 0}); });
  expect_error_kind(ErrorKind::kInvalidArgument, [] { InverseDepthLine(1.0, 1.0, {0, 0}, {0, 0}); });
}

TEST(InverseDepthFromPlucker, RecoversUnitDepths) {
  PluckerLine l({0, 1, 0}, {1, 0, 0});
  InverseDepthLine id = inverse_depth_from_plucker(l, {0, 0}, {1, 0});
  EXPECT_NEAR(id.lambda_s(), 1.0, 1e-15);
  EXPECT_NEAR(id.lambda_e(), 1.0, 1e-15);
}

TEST(InverseDepthFromPlucker, RecoversGeneratingDepths) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    auto seg = random_front_segment(rng);
    // Arbitrary positive joint scale.
    const double k = uniform(rng, 0.2, 5);
    PluckerLine l(seg.s.cross(seg.e) * k, (seg.e - seg.s) * k);
    InverseDepthLine id = inverse_depth_from_plucker(l, seg.s.hnormalized(), seg.e.hnormalized());
    EXPECT_NEAR(id.lambda_s() * seg.s.z(), 1.0, 1e-10);
    EXPECT_NEAR(id.lambda_e() * seg.e.z(), 1.0, 1e-10);
  }
}

TEST(InverseDepthFromPlucker, ParallelRayIsNoIntersection) {
  // Line along the optical axis direction through (1, 0, 0); the ray through
  // pixel (0, 0) is parallel to it.
  PluckerLine l = PluckerLine::through({1, 0, 1}, {1, 0, 2});
  expect_error_kind(ErrorKind::kNoIntersection,
                    [&] { inverse_depth_from_plucker(l, {0, 0}, {1, 0}); });
}

TEST(InverseDepthFromPlucker, MissingRayIsNoIntersection) {
  PluckerLine l = PluckerLine::through({-1, 1, 2}, {1, 1, 2});
  expect_error_kind(ErrorKind::kNoIntersection,
                    [&] { inverse_depth_from_plucker(l, {0, 0}, {0.3, 0.0}); });
}

TEST(InverseDepthFromPlucker, BehindCamera) {
  PluckerLine l = PluckerLine::through({-1, 0, -2}, {1, 0, -2});
  expect_error_kind(ErrorKind::kBehindCamera,
                    [&] { inverse_depth_from_plucker(l, {0, 0}, {0.25, 0.0}); });
}

bool is_signed_permutation(const Mat3& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double v = std::abs(m(r, c));
      if (v > 1e-12 && std::abs(v - 1.0) > 1e-12) return false;
    }
  return (m.cwiseAbs().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12;
}

TEST(OrthonormalFromPlucker, SymmetricUnitCase) {
  OrthonormalLine o = orthonormal_from_plucker({{0, 1, 0}, {1, 0, 0}});
  EXPECT_NEAR(o.theta1, std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(std::cos(o.theta1), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::sin(o.theta1), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(is_signed_permutation(o.U())) << o.U();
}

TEST(OrthonormalFromPlucker, NormRatio) {
  OrthonormalLine o = orthonormal_from_plucker({{0, 2, 0}, {1, 0, 0}});
  EXPECT_NEAR(o.theta1, std::atan2(1.0, 2.0), 1e-15);
}

TEST(OrthonormalFromPlucker, UColumnsAreNormalizedNAndD) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto seg = random_front_segment(rng);
    PluckerLine l = PluckerLine::through(seg.s, seg.e);
    Mat3 u = orthonormal_from_plucker(l).U();
    expect_vec_near(u.col(0), l.n.normalized(), 1e-12);
    expect_vec_near(u.col(1), l.d.normalized(), 1e-12);
    expect_vec_near(u.col(2), cross(l.n, l.d).normalized(), 1e-12);
  }
}

TEST(OrthonormalFromPlucker, LineThroughOriginIsDegenerate) {
  expect_error_kind(ErrorKind::kDegenerateLine,
                    [] { orthonormal_from_plucker({{0, 0, 0}, {1, 0, 0}}); });
  expect_error_kind(ErrorKind::kDegenerateLine,
                    [] { orthonormal_from_plucker({{1, 1, 0}, {1, 0, 0}}); });
}

TEST(PluckerFromOrthonormal, IdentityRotation) {
  OrthonormalLine o;
  o.theta1 = std::numbers::pi / 4;
  PluckerLine l = plucker_from_orthonormal(o);
  expect_vec_near(l.n, {1 / std::sqrt(2.0), 0, 0}, 1e-15);
  expect_vec_near(l.d, {0, 1 / std::sqrt(2.0), 0}, 1e-15);
}

TEST(PluckerFromOrthonormal, SymmetricCaseRoundTrip) {
  PluckerLine l({0, 1, 0}, {1, 0, 0});
  EXPECT_LT(line_error(plucker_from_orthonormal(orthonormal_from_plucker(l)), l), 1e-15);
}

TEST(PluckerFromOrthonormal, MatchesMatrixProduct) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    OrthonormalLine o;
    o.theta3 = uniform_vec3(rng, -2, 2);
    o.theta1 = uniform(rng, 0.05, 1.5);
    const Mat3 u = Eigen::AngleAxisd(o.theta3.norm(), o.theta3.normalized()).toRotationMatrix();
    Eigen::Matrix<double, 3, 2> nd =
        u.leftCols<2>() * Eigen::Vector2d(std::cos(o.theta1), std::sin(o.theta1)).asDiagonal();
    PluckerLine l = plucker_from_orthonormal(o);
    expect_vec_near(l.n, nd.col(0), 1e-12);
    expect_vec_near(l.d, nd.col(1), 1e-12);
    EXPECT_LT(l.klein_residual(), 1e-12);
  }
}

TEST(RoundTrip, OrthonormalAndInverseDepth) {
  Rng rng(2024);
  double worst_orth = 0.0;
  double worst_inv = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto seg = random_front_segment(rng);
    PluckerLine l = PluckerLine::through(seg.s, seg.e);
    worst_orth = std::max(worst_orth, line_error(plucker_from_orthonormal(orthonormal_from_plucker(l)), l));
    InverseDepthLine id = inverse_depth_from_plucker(l, seg.s.hnormalized(), seg.e.hnormalized());
    worst_inv = std::max(worst_inv, line_error(plucker_from_inverse_depth(id), l));
  }
  EXPECT_LT(worst_orth, 1e-9);
  EXPECT_LT(worst_inv, 1e-9);
}

TEST(TransformLine, IdentityPose) {
  PluckerLine l({0, 1, 0}, {1, 0, 0});
  PluckerLine t = transform_line(l, CameraPose::Identity());
  EXPECT_EQ(t.vector(), l.vector());
  EXPECT_EQ(invert_transform_line(l, CameraPose::Identity()).vector(), l.vector());
}

TEST(TransformLine, PureTranslationByHand) {
  PluckerLine t = transform_line({{0, 1, 0}, {1, 0, 0}}, {Mat3::Identity(), {0, 0, 1}});
  expect_vec_near(t.n, {0, 2, 0}, 1e-15);
  expect_vec_near(t.d, {1, 0, 0}, 1e-15);
}

TEST(TransformLine, AgreesWithTransformedPoints) {
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    CameraPose T = testing::random_pose(rng, 3.0);
    Vec3 p = uniform_vec3(rng, -3, 3);
    Vec3 q = uniform_vec3(rng, -3, 3);
    PluckerLine l = PluckerLine::through(p, q);
    PluckerLine fwd = PluckerLine::through(T.R * p + T.t, T.R * q + T.t);
    EXPECT_LT(line_error(transform_line(l, T), fwd), 1e-9);
    const Mat3 rt = T.R.transpose();
    PluckerLine inv = PluckerLine::through(rt * (p - T.t), rt * (q - T.t));
    EXPECT_LT(line_error(invert_transform_line(l, T), inv), 1e-9);
    EXPECT_LT(transform_line(l, T).klein_residual(), 1e-10);
  }
}

TEST(TransformLine, InverseRoundTrip) {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    CameraPose T = testing::random_pose(rng, 3.0);
    PluckerLine l = PluckerLine::through(uniform_vec3(rng, -3, 3), uniform_vec3(rng, -3, 3));
    PluckerLine back = invert_transform_line(transform_line(l, T), T);
    EXPECT_LT((back.vector() - l.vector()).norm(), 1e-12 * std::max(1.0, l.vector().norm()));
  }
}

TEST(TransformLine, GroupAction) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    CameraPose A = testing::random_pose(rng, 2.0);
    CameraPose B = testing::random_pose(rng, 2.0);
    PluckerLine l = PluckerLine::through(uniform_vec3(rng, -2, 2), uniform_vec3(rng, -2, 2));
    PluckerLine ab = transform_line(l, A * B);
    PluckerLine seq = transform_line(transform_line(l, B), A);
    EXPECT_LT((ab.vector() - seq.vector()).norm(), 1e-11 * std::max(1.0, l.vector().norm()));
  }
}

TEST(TransformLine, MotionMatricesMatchFunctions) {
  Rng rng(19);
  CameraPose T = testing::random_pose(rng, 2.0);
  PluckerLine l = PluckerLine::through(uniform_vec3(rng, -2, 2), uniform_vec3(rng, -2, 2));
  EXPECT_LT((line_motion_matrix(T) * l.vector() - transform_line(l, T).vector()).norm(), 1e-12);
  EXPECT_LT((inverse_line_motion_matrix(T) * l.vector() - invert_transform_line(l, T).vector()).norm(),
            1e-12);
  EXPECT_LT((inverse_line_motion_matrix(T) * line_motion_matrix(T) - Mat6::Identity()).norm(), 1e-12);
}

TEST(OrthonormalLine, PlusMatchesRightMultiplication) {
  Rng rng(23);
  OrthonormalLine o;
  o.theta3 = uniform_vec3(rng, -1, 1);
  o.theta1 = 0.7;
  Vec4 delta(0.01, -0.02, 0.03, 0.05);
  OrthonormalLine p = o.plus(delta);
  const Vec3 w = delta.head<3>();
  Mat3 expected = o.U() * Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
  EXPECT_LT((p.U() - expected).norm(), 1e-12);
  EXPECT_NEAR(p.theta1, 0.75, 1e-15);
}

}  // namespace
}  // namespace lineba
