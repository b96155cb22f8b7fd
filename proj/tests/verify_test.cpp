#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "asgreg/asgreg.hpp"
#include "test_support.hpp"

namespace asgreg {
namespace {

Mat34 ImageShift(const Mat34& p, double dx, double dy) {
  Mat3 t = Mat3::Identity();
  t(0, 2) = dx;
  t(1, 2) = dy;
  return t * p;
}

PoseHypothesis Hypothesis(const Mat34& p, size_t inliers = 10, double rmse = 1.0) {
  PoseHypothesis h;
  h.projection = ProjectionMatrix(p);
  h.inliers.resize(inliers);
  std::iota(h.inliers.begin(), h.inliers.end(), 0);
  h.inlier_rmse = rmse;
  return h;
}

// Graph over `n` dummy nodes with the given undirected edges.
CompatibilityGraph ManualGraph(const std::vector<size_t>& consensus,
                               const std::vector<std::pair<int, int>>& edges,
                               const std::vector<double>& rmse = {}) {
  CompatibilityGraph g;
  for (size_t i = 0; i < consensus.size(); ++i) {
    g.nodes.push_back(Hypothesis(ProjectionMatrix().matrix(), consensus[i],
                                 rmse.empty() ? 1.0 : rmse[i]));
  }
  for (const auto& [i, j] : edges) g.edges.push_back({i, j, 0.0});
  return g;
}

std::vector<Vec3> RandomPoints(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

TEST(MutualReprojectionError, IdenticalProjectionsGiveZero) {
  std::mt19937_64 rng(1);
  const ProjectionMatrix p =
      ComposeProjection(testing::RandomIntrinsics(rng), testing::RandomPoseFacingOrigin(rng));
  const auto pts = RandomPoints(rng, 50);
  EXPECT_EQ(MutualReprojectionError(p, p, pts, pts), 0.0);
}

TEST(MutualReprojectionError, UniformShiftOfThreeFourIsFive) {
  // Integer points on the plane z = 1 make every projected difference exact.
  std::vector<Vec3> pts;
  for (int y = -3; y <= 3; ++y) {
    for (int x = -4; x <= 4; ++x) pts.emplace_back(x, y, 1.0);
  }
  const ProjectionMatrix p;
  const ProjectionMatrix q(ImageShift(p.matrix(), 3, 4));
  EXPECT_EQ(MutualReprojectionError(p, q, pts, pts), 5.0);
}

TEST(MutualReprojectionError, UniformShiftOnMeshVisibility) {
  const SyntheticScene scene = MakeSyntheticScene("house", 0);
  const CameraIntrinsics& k = scene.intrinsics;
  const CameraPose& pose = scene.cameras[7];
  CameraIntrinsics shifted = k;
  shifted.cx += 3.0;
  shifted.cy += 4.0;
  // Shifting the principal point moves every pixel by (3, 4) while the
  // visibility sets stay identical.
  EXPECT_NEAR(MutualReprojectionError(scene.mesh, k, pose, shifted, pose), 5.0, 1e-9);
}

TEST(MutualReprojectionError, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const ProjectionMatrix p =
        ComposeProjection(testing::RandomIntrinsics(rng), testing::RandomPoseFacingOrigin(rng));
    const ProjectionMatrix q =
        ComposeProjection(testing::RandomIntrinsics(rng), testing::RandomPoseFacingOrigin(rng));
    const auto vp = RandomPoints(rng, 40);
    const auto vq = RandomPoints(rng, 25);
    const double a = MutualReprojectionError(p, q, vp, vq);
    const double b = MutualReprojectionError(q, p, vq, vp);
    EXPECT_EQ(a, b);
  }
}

TEST(MutualReprojectionError, MatchesDirectSummation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose a = testing::RandomPoseFacingOrigin(rng);
    const CameraPose b = testing::RandomPoseFacingOrigin(rng, 12.0);
    const ProjectionMatrix p = ComposeProjection(k, a);
    const ProjectionMatrix q = ComposeProjection(k, b);
    const auto vp = RandomPoints(rng, 30);
    const auto vq = RandomPoints(rng, 17);
    const auto mean = [&](const std::vector<Vec3>& pts) {
      double s = 0.0;
      for (const Vec3& x : pts) {
        const Vec3 ca = k.Matrix() * a.ToCamera(x);
        const Vec3 cb = k.Matrix() * b.ToCamera(x);
        s += (ca.head<2>() / ca.z() - cb.head<2>() / cb.z()).norm();
      }
      return s / pts.size();
    };
    const double expected = 0.5 * (mean(vp) + mean(vq));
    EXPECT_NEAR(MutualReprojectionError(p, q, vp, vq), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(MutualReprojectionError, EmptyVisibilityIsIncomparable) {
  const ProjectionMatrix p;
  const std::vector<Vec3> none;
  const std::vector<Vec3> one = {Vec3(0, 0, 1)};
  EXPECT_THROW(MutualReprojectionError(p, p, none, one), IncomparableError);
}

TEST(MutualReprojectionError, StrideTwoSamplingChangesMeanLittle) {
  const SyntheticScene scene = MakeSyntheticScene("house", 0);
  const CameraIntrinsics& k = scene.intrinsics;
  const CameraPose& gt = scene.cameras[11];
  const CameraPose moved = CameraPose::FromApproximateRotation(
      AxisAngle(Vec3(0.2, 1.0, 0.1), 0.02) * gt.rotation(), gt.translation() + Vec3(0.2, 0, 0.1));
  const double full = MutualReprojectionError(scene.mesh, k, gt, k, moved, 1);
  const double strided = MutualReprojectionError(scene.mesh, k, gt, k, moved, 2);
  EXPECT_GT(full, 5.0);
  EXPECT_LT(std::abs(full - strided), 0.1);
}

class HouseGraph : public ::testing::Test {
 protected:
  void SetUp() override {
    scene_ = MakeSyntheticScene("house", 0);
    base_ = ComposeProjection(scene_.intrinsics, scene_.cameras[6]).matrix();
  }
  SyntheticScene scene_;
  Mat34 base_;
};

TEST_F(HouseGraph, ThresholdIsFivePercentOfLongestSide) {
  const CompatibilityGraph g =
      BuildGraph({Hypothesis(base_)}, scene_.mesh, scene_.intrinsics.width,
                 scene_.intrinsics.height);
  EXPECT_DOUBLE_EQ(g.threshold, 25.25);
}

TEST_F(HouseGraph, IdenticalHypothesesFormCompleteGraph) {
  std::vector<PoseHypothesis> hyps(6, Hypothesis(base_));
  const CompatibilityGraph g = BuildGraph(hyps, scene_.mesh, 505, 275);
  EXPECT_EQ(g.edges.size(), 15u);
  for (const auto& e : g.edges) {
    EXPECT_NE(e.i, e.j);
    EXPECT_NEAR(e.delta, 0.0, 1e-9);
  }
}

TEST_F(HouseGraph, SeparatedClustersFormTwoComponents) {
  std::vector<PoseHypothesis> hyps;
  for (int i = 0; i < 5; ++i) hyps.push_back(Hypothesis(ImageShift(base_, i * 0.5, 0)));
  for (int i = 0; i < 5; ++i) hyps.push_back(Hypothesis(ImageShift(base_, 100 + i * 0.5, 0)));
  const CompatibilityGraph g = BuildGraph(hyps, scene_.mesh, 505, 275);
  for (const auto& e : g.edges) EXPECT_EQ(e.i < 5, e.j < 5);
  for (const auto& e : g.evaluated) {
    if ((e.i < 5) != (e.j < 5)) EXPECT_GT(e.delta, 95.0);
    EXPECT_EQ(e.delta < g.threshold,
              std::any_of(g.edges.begin(), g.edges.end(),
                          [&](const GraphEdge& x) { return x.i == e.i && x.j == e.j; }));
  }
  const auto comps = ConnectedComponents(g);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(comps[1], (std::vector<int>{5, 6, 7, 8, 9}));
}

TEST_F(HouseGraph, HypothesisSeeingNothingStaysIsolated) {
  // Same camera centre, looking directly away from the model.
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : scene_.mesh.vertices()) centroid += v;
  centroid /= static_cast<double>(scene_.mesh.vertices().size());
  const Vec3 eye = scene_.cameras[6].Center();
  const CameraPose away = CameraPose::LookAt(eye, 2 * eye - centroid, Vec3::UnitZ());
  std::vector<PoseHypothesis> hyps(3, Hypothesis(base_));
  hyps.push_back(Hypothesis(ComposeProjection(scene_.intrinsics, away).matrix()));
  const CompatibilityGraph g = BuildGraph(hyps, scene_.mesh, 505, 275);
  for (const auto& e : g.evaluated) {
    EXPECT_NE(e.i, 3);
    EXPECT_NE(e.j, 3);
  }
}

TEST(SelectPose, FullyCompatibleSetSucceedsWithMaxConsensus) {
  std::vector<size_t> consensus(15);
  for (size_t i = 0; i < 15; ++i) consensus[i] = 20 + (i * 7) % 15;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 15; ++i) {
    for (int j = i + 1; j < 15; ++j) edges.emplace_back(i, j);
  }
  const Selection s = SelectPose(ManualGraph(consensus, edges));
  EXPECT_TRUE(s.success);
  EXPECT_EQ(s.component.size(), 15u);
  EXPECT_EQ(consensus[static_cast<size_t>(s.selected)], 34u);
}

TEST(SelectPose, ComponentOfThreeIsRejected) {
  const Selection s =
      SelectPose(ManualGraph({5, 5, 5, 5, 5, 5, 5}, {{0, 1}, {1, 2}, {3, 4}}));
  EXPECT_FALSE(s.success);
  EXPECT_EQ(s.component.size(), 3u);
  EXPECT_EQ(s.selected, -1);
}

TEST(SelectPose, ComponentOfFourAmongIsolatedNodesSucceeds) {
  std::vector<size_t> consensus(15, 50);
  consensus[2] = 10;
  consensus[5] = 12;
  consensus[9] = 11;
  consensus[13] = 8;
  const Selection s =
      SelectPose(ManualGraph(consensus, {{2, 5}, {5, 9}, {9, 13}}));
  EXPECT_TRUE(s.success);
  EXPECT_EQ(s.component, (std::vector<int>{2, 5, 9, 13}));
  EXPECT_EQ(s.selected, 5);
}

TEST(SelectPose, TiesBrokenByRmseThenIndex) {
  const std::vector<std::pair<int, int>> chain = {{0, 1}, {1, 2}, {2, 3}};
  EXPECT_EQ(SelectPose(ManualGraph({9, 9, 9, 9}, chain, {1.0, 0.5, 0.7, 0.5})).selected, 1);
  EXPECT_EQ(SelectPose(ManualGraph({9, 9, 9, 9}, chain, {1.0, 1.0, 1.0, 1.0})).selected, 0);
}

TEST(SelectPose, LargestComponentMatchesUnionFind) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 15;
    std::bernoulli_distribution edge(0.12);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (edge(rng)) edges.emplace_back(i, j);
      }
    }
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& [i, j] : edges) parent[find(i)] = find(j);
    std::vector<int> size(n, 0);
    for (int i = 0; i < n; ++i) ++size[find(i)];
    const Selection s = SelectPose(ManualGraph(std::vector<size_t>(n, 1), edges));
    EXPECT_EQ(static_cast<int>(s.component.size()), *std::max_element(size.begin(), size.end()));
  }
}

TEST(SelectPose, InvariantToNodeOrdering) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10;
    std::vector<size_t> consensus(n);
    for (int i = 0; i < n; ++i) consensus[i] = 100 + static_cast<size_t>(i) * 3;  // distinct
    std::shuffle(consensus.begin(), consensus.end(), rng);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < 6; ++i) edges.emplace_back(i, i + 1);  // one 6-chain
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<size_t> permuted(n);
    for (int i = 0; i < n; ++i) permuted[perm[i]] = consensus[i];
    std::vector<std::pair<int, int>> permuted_edges;
    for (const auto& [i, j] : edges) permuted_edges.emplace_back(perm[i], perm[j]);
    const Selection a = SelectPose(ManualGraph(consensus, edges));
    const Selection b = SelectPose(ManualGraph(permuted, permuted_edges));
    ASSERT_TRUE(a.success && b.success);
    EXPECT_EQ(consensus[a.selected], permuted[b.selected]);
  }
}

}  // namespace
}  // namespace asgreg
