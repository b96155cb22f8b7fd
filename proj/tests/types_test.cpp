#include <gtest/gtest.h>

#include <random>

#include "asgreg/asgreg.hpp"
#include "test_support.hpp"

namespace asgreg {
namespace {

ProjectionMatrix Canonical() { return ProjectionMatrix(); }

TEST(ProjectPoint, PixelOfPointInFront) {
  const ProjectedPoint p = ProjectPoint(Canonical(), Vec3(1, 1, 1));
  EXPECT_DOUBLE_EQ(p.pixel.x(), 1.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 1.0);
  EXPECT_EQ(p.depth_sign, DepthSign::kPositive);
}

TEST(ProjectPoint, PointBehindCameraHasNegativeSign) {
  EXPECT_EQ(ProjectPoint(Canonical(), Vec3(0, 0, -1)).depth_sign, DepthSign::kNegative);
}

TEST(ProjectPoint, PrincipalPlaneIsAtInfinity) {
  EXPECT_THROW(ProjectPoint(Canonical(), Vec3(1, 0, 0)), AtInfinityError);
}

TEST(ProjectPoint, InvariantToScale) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose pose = testing::RandomPoseFacingOrigin(rng);
    const ProjectionMatrix p = ComposeProjection(k, pose);
    const Vec3 x(0.3, -0.2, 0.5);
    const ProjectedPoint a = p.Project(x);
    for (double s : {2.5, -0.7, 1e3, -4e-3}) {
      const ProjectedPoint b = p.Scaled(s).Project(x);
      EXPECT_NEAR((a.pixel - b.pixel).norm(), 0.0, 1e-12 * (1.0 + a.pixel.norm()));
      EXPECT_EQ(a.depth_sign == b.depth_sign, s > 0);
    }
  }
}

TEST(ProjectionMatrix, RejectsRankDeficientLeftBlock) {
  Mat34 m = Mat34::Zero();
  m(0, 0) = m(1, 1) = 1.0;
  EXPECT_THROW(ProjectionMatrix{m}, InputError);
}

TEST(CameraPose, RejectsNonOrthonormalRotation) {
  Mat3 r = Mat3::Identity();
  r(0, 0) = 1.1;
  EXPECT_THROW(CameraPose(r, Vec3::Zero()), InputError);
  EXPECT_THROW(CameraPose(-Mat3::Identity(), Vec3::Zero()), InputError);
}

TEST(CameraPose, LookAtPlacesTargetOnOpticalAxis) {
  const CameraPose pose = CameraPose::LookAt({10, 2, 3}, {0, 1, 0}, Vec3::UnitZ());
  const Vec3 c = pose.ToCamera({0, 1, 0});
  EXPECT_NEAR(c.x(), 0.0, 1e-12);
  EXPECT_NEAR(c.y(), 0.0, 1e-12);
  EXPECT_GT(c.z(), 0.0);
  EXPECT_NEAR((pose.Center() - Vec3(10, 2, 3)).norm(), 0.0, 1e-12);
  // World up maps to image up (negative y).
  EXPECT_LT(pose.ToCamera({0, 1, 1}).y(), 0.0);
}

TEST(CameraIntrinsics, Validation) {
  EXPECT_THROW(CameraIntrinsics::Create(0, 1, 0, 0, 10, 10), InputError);
  EXPECT_THROW(CameraIntrinsics::Create(1, 1, 0, 0, 0, 10), InputError);
  EXPECT_NO_THROW(CameraIntrinsics::Create(1, 1, 0, 0, 1, 1));
}

TEST(CameraIntrinsics, UnprojectInvertsProjection) {
  std::mt19937_64 rng(5);
  const CameraIntrinsics k = testing::RandomIntrinsics(rng);
  const ProjectionMatrix p = ComposeProjection(k, CameraPose());
  const Vec3 ray = k.Unproject(123.25, 77.5);
  const Vec2 px = p.Project(3.0 * ray).pixel;
  EXPECT_NEAR(px.x(), 123.25, 1e-9);
  EXPECT_NEAR(px.y(), 77.5, 1e-9);
}

TEST(TriangleMesh, RejectsBadFaces) {
  const std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(TriangleMesh(v, {{0, 1, 3}}), InputError);
  EXPECT_THROW(TriangleMesh(v, {{0, 1, 1}}), InputError);
  EXPECT_NO_THROW(TriangleMesh(v, {{0, 1, 2}}));
}

TEST(DerivativeKernel, MustSumToZero) {
  std::array<std::array<double, 3>, 3> bad{};
  bad[1][1] = 1.0;
  const auto good = DerivativeKernel::CentralDifference();
  EXPECT_THROW(DerivativeKernel::Create(bad, good.hy), InputError);
  EXPECT_NO_THROW(DerivativeKernel::Create(good.hx, good.hy));
}

TEST(LightDirection, MustBeUnit) {
  EXPECT_THROW(LightDirection(Vec3(1, 1, 0)), InputError);
  EXPECT_NO_THROW(LightDirection(Vec3(0, 0, -1)));
}

TEST(Rasters, ValidationInvariants) {
  DepthMap d(2, 2, 0.0);
  d.Set(0, 0, -1.0);
  EXPECT_THROW(d.Validate(), InputError);
  NormalMap n(2, 2, Vec3::Zero());
  n.Set(1, 1, Vec3(0, 0, 2));
  EXPECT_THROW(n.Validate(), InputError);
  GradientImage g(2, 2, 0.0);
  g(0, 1) = 3.0;  // invalid pixel must hold zero
  EXPECT_THROW(g.Validate(), InputError);
  EXPECT_THROW(Raster<int>(-1, 2), InputError);
}

}  // namespace
}  // namespace asgreg
