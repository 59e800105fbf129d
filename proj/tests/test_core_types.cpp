#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "evlo/core_types.hpp"
#include "evlo/error.hpp"
#include "evlo/rng.hpp"

namespace evlo {
namespace {

constexpr double kPi = std::numbers::pi;

Pose random_pose(Rng& rng) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return {rot_axis_angle(axis, rng.uniform(0.0, kPi)),
          Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10))};
}

double pose_distance(const Pose& a, const Pose& b) {
  return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

TEST(Compose, IdentityAndInverse) {
  Rng rng(3);
  const Pose p = random_pose(rng);
  EXPECT_LT(pose_distance(compose(Pose::identity(), p), p), 1e-15);
  EXPECT_LT(pose_distance(compose(p, p.inverse()), Pose::identity()), 1e-12);
}

TEST(Compose, MatchesHomogeneousProduct) {
  const Pose a{rot_z(kPi / 2), Vec3(1, 0, 0)};
  const Pose b{rot_z(kPi / 2), Vec3::Zero()};
  const Pose c = compose(a, b);
  Eigen::Matrix4d ma = Eigen::Matrix4d::Identity(), mb = Eigen::Matrix4d::Identity();
  ma.topLeftCorner<3, 3>() << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  ma(0, 3) = 1.0;
  mb.topLeftCorner<3, 3>() << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((c.matrix() - ma * mb).norm(), 1e-12);
  Mat3 rz180;
  rz180 << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  EXPECT_LT((c.rotation - rz180).norm(), 1e-12);
  EXPECT_LT((c.translation - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(Compose, Associative) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT(pose_distance((a * b) * c, a * (b * c)), 1e-12);
  }
}

TEST(Apply, ElementaryCases) {
  PointCloud c;
  c.points = {Vec3(0, 0, 0)};
  c.intensity = std::vector<double>{0.25};
  const PointCloud moved = apply(Pose::from_translation(Vec3(1, 2, 3)), c);
  EXPECT_EQ(moved.points[0], Vec3(1, 2, 3));
  ASSERT_TRUE(moved.intensity.has_value());
  EXPECT_EQ((*moved.intensity)[0], 0.25);

  const PointCloud same = apply(Pose::identity(), c);
  EXPECT_EQ(same.points[0], c.points[0]);

  PointCloud x;
  x.points = {Vec3(1, 0, 0)};
  EXPECT_LT((apply(Pose{rot_z(kPi / 2), Vec3::Zero()}, x).points[0] - Vec3(0, 1, 0)).norm(),
            1e-12);
}

TEST(Apply, ComposeActsSequentially) {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(rng.normal(), rng.normal(), rng.normal());
  const Pose a = random_pose(rng), b = random_pose(rng);
  const auto lhs = evlo::apply(a * b, pts);
  const auto rhs = evlo::apply(a, evlo::apply(b, pts));
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((lhs[i] - rhs[i]).norm(), 1e-12);
}

TEST(PoseVec6, ZeroAndYaw) {
  EXPECT_LT(pose_distance(pose_from_vec6({}), Pose::identity()), 1e-15);
  PoseVec6 v;
  v.euler = Vec3(0, 0, kPi / 2);
  Mat3 rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((pose_from_vec6(v).rotation - rz).norm(), 1e-15);
}

TEST(PoseVec6, IntrinsicXyzOrder) {
  PoseVec6 v;
  v.euler = Vec3(0.3, -0.4, 1.1);
  EXPECT_LT((pose_from_vec6(v).rotation - rot_x(0.3) * rot_y(-0.4) * rot_z(1.1)).norm(),
            1e-15);
}

TEST(PoseVec6, RoundTrip) {
  Rng rng(17);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    PoseVec6 v;
    v.euler = Vec3(rng.uniform(-kPi, kPi), rng.uniform(-1.4, 1.4), rng.uniform(-kPi, kPi));
    v.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
    const PoseVec6 back = vec6_from_pose(pose_from_vec6(v));
    worst = std::max(worst, (back.as_vector() - v.as_vector()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(PoseVec6, GimbalLockThrows) {
  PoseVec6 v;
  v.euler = Vec3(0.1, kPi / 2, 0.2);
  try {
    vec6_from_pose(pose_from_vec6(v));
    FAIL() << "expected GimbalLock";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGimbalLock);
  }
}

TEST(PoseChain, LongChainStaysRigid) {
  Rng rng(23);
  PoseChain chain;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    chain.append({rot_axis_angle(axis, 0.1), Vec3(0.1, 0.0, 0.0)});
    const Mat3& r = chain.current().rotation;
    ASSERT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-9);
    ASSERT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(NearestRotation, ProjectsPerturbedMatrix) {
  const Mat3 r = rot_axis_angle(Vec3(1, 2, 3), 0.7);
  Mat3 noisy = r;
  noisy(0, 1) += 1e-4;
  const Mat3 fixed = nearest_rotation(noisy);
  EXPECT_LT((fixed.transpose() * fixed - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((fixed - r).norm(), 1e-4);
}

TEST(PointCloud, ValidateRejectsNonFinite) {
  PointCloud c;
  c.points = {Vec3(0, 0, std::nan(""))};
  EXPECT_THROW(c.validate(), Error);
  PointCloud d;
  d.points = {Vec3::Zero()};
  d.intensity = std::vector<double>{0.1, 0.2};
  EXPECT_THROW(d.validate(), Error);
}

}  // namespace
}  // namespace evlo
