#include <gtest/gtest.h>

#include <random>

#include "asgreg/asgreg.hpp"
#include "test_support.hpp"

namespace asgreg {
namespace {

using testing::Contaminated;
using testing::ExactCorrespondences;
using testing::RandomIntrinsics;
using testing::RandomPoseFacingOrigin;

double TranslationRelError(const CameraPose& a, const CameraPose& b) {
  return (a.translation() - b.translation()).norm() / b.translation().norm();
}

TEST(ReprojectionRmse, ExactIsZeroAndUniformShiftIsFive) {
  std::mt19937_64 rng(1);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  auto corrs = ExactCorrespondences(rng, k, pose, 30);
  EXPECT_NEAR(ReprojectionRmse(k, pose, corrs), 0.0, 1e-9);
  for (auto& c : corrs) c.pixel += Vec2(3, 4);
  EXPECT_NEAR(ReprojectionRmse(k, pose, corrs), 5.0, 1e-9);
}

TEST(ReprojectionRmse, MatchesPerPointOracle) {
  std::mt19937_64 rng(2);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  auto corrs = ExactCorrespondences(rng, k, pose, 40);
  std::normal_distribution<double> n(0.0, 3.0);
  for (auto& c : corrs) c.pixel += Vec2(n(rng), n(rng));
  double sum = 0.0;
  for (const auto& c : corrs) {
    const Vec3 cam = k.Matrix() * pose.ToCamera(c.world);
    sum += (Vec2(cam.x() / cam.z(), cam.y() / cam.z()) - c.pixel).squaredNorm();
  }
  EXPECT_NEAR(ReprojectionRmse(k, pose, corrs), std::sqrt(sum / corrs.size()), 1e-9);
}

TEST(ReprojectionRmse, PointBehindCameraCostsPenalty) {
  const CameraIntrinsics k = CameraIntrinsics::Create(1, 1, 0, 0, 10, 10);
  const std::vector<Correspondence2D3D> corrs = {{Vec2(0, 0), Vec3(0, 0, -1), 0}};
  EXPECT_DOUBLE_EQ(ReprojectionRmse(k, CameraPose(), corrs), kBehindCameraPenalty);
}

TEST(Dlt, SixExactPointsRecoverProjection) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const CameraPose pose = RandomPoseFacingOrigin(rng);
    const auto corrs = ExactCorrespondences(rng, k, pose, 6);
    const DltSolution sol = DltWithDiagnostics(corrs);
    EXPECT_LT(ReprojectionRmse(sol.projection, corrs), 1e-8);
    EXPECT_LT(ProjectionDistanceUpToScale(sol.projection.matrix(),
                                          ComposeProjection(k, pose).matrix()),
              1e-6);
  }
}

TEST(Dlt, OverdeterminedNoiseFreeIsExact) {
  std::mt19937_64 rng(4);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  const auto corrs = ExactCorrespondences(rng, k, pose, 20);
  const DltSolution sol = DltWithDiagnostics(corrs);
  EXPECT_LT(ReprojectionRmse(sol.projection, corrs), 1e-8);
  EXPECT_LT(sol.residual_ratio, 1e-10);
}

TEST(Dlt, CoplanarPointsAreDegenerate) {
  std::mt19937_64 rng(5);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  EXPECT_THROW(Dlt(ExactCorrespondences(rng, k, pose, 8, true)), DegeneracyError);
}

TEST(Dlt, NeedsSixPoints) {
  std::mt19937_64 rng(6);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  EXPECT_THROW(Dlt(ExactCorrespondences(rng, k, pose, 5)), InputError);
}

TEST(Decompose, RoundTripsComposedProjection) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const CameraPose pose = RandomPoseFacingOrigin(rng);
    const Mat34 p = ComposeProjection(k, pose).matrix();
    for (double s : {1.0, -3.0, 0.01}) {
      const auto [k2, pose2] = Decompose(p * s, k.width, k.height);
      EXPECT_NEAR(k2.fx, k.fx, 1e-8 * k.fx);
      EXPECT_NEAR(k2.fy, k.fy, 1e-8 * k.fy);
      EXPECT_NEAR(k2.cx, k.cx, 1e-8 * k.fx);
      EXPECT_NEAR(k2.cy, k.cy, 1e-8 * k.fy);
      EXPECT_NEAR(k2.skew, k.skew, 1e-8 * k.fx);
      EXPECT_LT(RotationAngleBetween(pose2, pose), 1e-8);
      EXPECT_LT(TranslationRelError(pose2, pose), 1e-8);
    }
  }
}

TEST(Decompose, RankDeficientLeftBlockFails) {
  Mat34 p = Mat34::Zero();
  p(0, 0) = p(1, 1) = p(2, 3) = 1.0;
  EXPECT_THROW(Decompose(p), DecompositionError);
}

TEST(Decompose, DltRoundTripReproducesProjection) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const CameraPose pose = RandomPoseFacingOrigin(rng);
    const ProjectionMatrix p = Dlt(ExactCorrespondences(rng, k, pose, 12));
    const auto [k2, pose2] = Decompose(p);
    EXPECT_LT(ProjectionDistanceUpToScale(ComposeProjection(k2, pose2).matrix(), p.matrix()),
              1e-6);
  }
}

TEST(Epnp, NonPlanarExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const CameraPose pose = RandomPoseFacingOrigin(rng);
    const auto corrs = ExactCorrespondences(rng, k, pose, 6);
    const CameraPose est = Epnp(corrs, k);
    EXPECT_LT(RotationAngleBetween(est, pose), 1e-6);
    EXPECT_LT(TranslationRelError(est, pose), 1e-6);
  }
}

TEST(Epnp, PlanarExact) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const CameraPose pose = RandomPoseFacingOrigin(rng);
    const auto corrs = ExactCorrespondences(rng, k, pose, 8, true);
    EXPECT_LT(ReprojectionRmse(k, Epnp(corrs, k), corrs), 1e-4);
  }
}

TEST(Epnp, AgreesWithDltOnNoiseFreeData) {
  std::mt19937_64 rng(11);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  const auto corrs = ExactCorrespondences(rng, k, pose, 15);
  EXPECT_LT(ReprojectionRmse(k, Epnp(corrs, k), corrs), 1e-6);
  EXPECT_LT(ReprojectionRmse(Dlt(corrs), corrs), 1e-6);
}

TEST(Epnp, RejectsTooFewOrCoincidentPoints) {
  std::mt19937_64 rng(12);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  const auto corrs = ExactCorrespondences(rng, k, pose, 3);
  EXPECT_THROW(Epnp(corrs, k), InputError);
  const std::vector<Correspondence2D3D> same(4, corrs[0]);
  EXPECT_THROW(Epnp(same, k), InputError);
}

TEST(Ransac, ExactInliersStopOnFirstIteration) {
  std::mt19937_64 rng(13);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  const auto corrs = ExactCorrespondences(rng, k, pose, 100);
  for (const EstimationMode& mode : {EstimationMode(FullDlt{k.width, k.height}),
                                     EstimationMode(KnownIntrinsics{k})}) {
    RansacParams params;
    params.sample_size = 6;
    const PoseHypothesis h = RansacRefine(corrs, mode, params);
    EXPECT_EQ(h.iterations, 1);
    EXPECT_DOUBLE_EQ(h.consensus_fraction, 1.0);
    EXPECT_EQ(h.inliers.size(), 100u);
    ASSERT_TRUE(h.decomposed.has_value());
    EXPECT_LT(ProjectionDistanceUpToScale(
                  ComposeProjection(h.decomposed->first, h.decomposed->second).matrix(),
                  h.projection.matrix()),
              1e-6);
  }
}

TEST(Ransac, RecoversPoseFromContaminatedSet) {
  std::mt19937_64 rng(14);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const CameraPose pose = RandomPoseFacingOrigin(rng);
  const auto corrs = Contaminated(rng, k, pose, 0.5);
  RansacParams params;
  params.inlier_threshold = 3.0;
  params.rng_seed = 99;
  const PoseHypothesis h = RansacRefine(corrs, FullDlt{k.width, k.height}, params);
  EXPECT_GE(h.consensus_fraction, 0.65);
  EXPECT_LE(h.iterations, 500);
  const std::span<const Correspondence2D3D> inliers(corrs.data(), 70);
  EXPECT_LT(ReprojectionRmse(h.projection, inliers), 1.0);
  EXPECT_DOUBLE_EQ(h.consensus_fraction,
                   static_cast<double>(h.inliers.size()) / static_cast<double>(corrs.size()));
}

TEST(Ransac, AllOutliersRunToTheCap) {
  std::mt19937_64 rng(15);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  auto corrs = ExactCorrespondences(rng, k, RandomPoseFacingOrigin(rng), 100);
  std::uniform_real_distribution<double> ux(0.0, k.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, k.height - 1.0);
  for (auto& c : corrs) c.pixel = Vec2(ux(rng), uy(rng));
  RansacParams params;
  params.max_iterations = 120;
  const PoseHypothesis h = RansacRefine(corrs, FullDlt{k.width, k.height}, params);
  EXPECT_EQ(h.iterations, 120);
  EXPECT_LT(h.consensus_fraction, 0.65);
}

TEST(Ransac, FinalConsensusNeverBelowSampledBest) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraIntrinsics k = RandomIntrinsics(rng);
    const auto corrs = Contaminated(rng, k, RandomPoseFacingOrigin(rng), 1.0);
    RansacParams params;
    params.rng_seed = static_cast<uint64_t>(trial);
    params.min_consensus_fraction = 0.9;  // force the full loop
    params.max_iterations = 60;
    const PoseHypothesis h = RansacRefine(corrs, FullDlt{k.width, k.height}, params);
    EXPECT_GE(h.inliers.size(), h.sampled_inliers);
  }
}

TEST(Ransac, BitDeterministicForFixedSeed) {
  std::mt19937_64 rng(17);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const auto corrs = Contaminated(rng, k, RandomPoseFacingOrigin(rng), 0.5);
  RansacParams params;
  params.rng_seed = 5;
  const PoseHypothesis a = RansacRefine(corrs, KnownIntrinsics{k}, params);
  const PoseHypothesis b = RansacRefine(corrs, KnownIntrinsics{k}, params);
  EXPECT_EQ(a.projection.matrix(), b.projection.matrix());
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Ransac, RejectsUnderSizedInput) {
  std::mt19937_64 rng(18);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const auto corrs = ExactCorrespondences(rng, k, RandomPoseFacingOrigin(rng), 5);
  EXPECT_THROW(RansacRefine(corrs, FullDlt{}, RansacParams{}), InputError);
  RansacParams small;
  small.sample_size = 5;
  EXPECT_THROW(RansacRefine(corrs, FullDlt{}, small), InputError);
}

TEST(Ransac, AllDegenerateSamplesFail) {
  std::mt19937_64 rng(19);
  const CameraIntrinsics k = RandomIntrinsics(rng);
  const auto corrs = ExactCorrespondences(rng, k, RandomPoseFacingOrigin(rng), 30, true);
  RansacParams params;
  params.max_iterations = 20;
  EXPECT_THROW(RansacRefine(corrs, FullDlt{k.width, k.height}, params), RefinementFailedError);
}

}  // namespace
}  // namespace asgreg
