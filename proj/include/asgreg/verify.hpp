#pragma once

// Plausibility check over refined pose hypotheses: mutual reprojection error,
// compatibility graph, largest connected component and final selection.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "asgreg/pose.hpp"
#include "asgreg/rasterizer.hpp"

namespace asgreg {

struct VerifyParams {
  int stride = 2;                  // visibility sampling stride in x and y
  double threshold_fraction = 0.05;  // of the longest image dimension
};

// Model points seen by camera (k, pose): backprojections of the rendered depth
// at every `stride`-th pixel in x and y.
inline std::vector<Vec3> VisibleModelPoints(const TriangleMesh& mesh,
                                            const CameraIntrinsics& k,
                                            const CameraPose& pose, int stride) {
  const RenderOutput render = Render(mesh, k, pose);
  return Backproject(render.depth, k, pose, stride);
}

namespace internal {

inline double ProjectedDistance(const Mat34& a, const Mat34& b, const Vec3& x) {
  const Eigen::Vector3d pa = a.leftCols<3>() * x + a.col(3);
  const Eigen::Vector3d pb = b.leftCols<3>() * x + b.col(3);
  if (std::abs(pa(2)) < 1e-12 * a.norm() || std::abs(pb(2)) < 1e-12 * b.norm()) {
    return kBehindCameraPenalty;
  }
  const double dx = pa(0) / pa(2) - pb(0) / pb(2);
  const double dy = pa(1) / pa(2) - pb(1) / pb(2);
  return std::sqrt(dx * dx + dy * dy);
}

inline double MeanProjectedDistance(const Mat34& a, const Mat34& b,
                                    std::span<const Vec3> points) {
  double sum = 0.0;
  for (const Vec3& x : points) sum += ProjectedDistance(a, b, x);
  return sum / static_cast<double>(points.size());
}

}  // namespace internal

// Half the sum of the mean pixel distance between the two projections over
// the points visible to the first camera and over those visible to the second.
// No occlusion test is applied under the other camera. Exactly symmetric.
inline double MutualReprojectionError(const ProjectionMatrix& p, const ProjectionMatrix& q,
                                      std::span<const Vec3> visible_p,
                                      std::span<const Vec3> visible_q) {
  if (visible_p.empty() || visible_q.empty()) {
    throw IncomparableError("a pose sees no model points");
  }
  // Both terms are evaluated with the matrices in a canonical order so that
  // swapping the poses reproduces the same floating-point sums.
  const Mat34& mp = p.matrix();
  const Mat34& mq = q.matrix();
  const bool swap = std::lexicographical_compare(mq.data(), mq.data() + mq.size(), mp.data(),
                                                 mp.data() + mp.size());
  const Mat34& first = swap ? mq : mp;
  const Mat34& second = swap ? mp : mq;
  const double a = internal::MeanProjectedDistance(first, second, visible_p);
  const double b = internal::MeanProjectedDistance(first, second, visible_q);
  return 0.5 * (std::min(a, b) + std::max(a, b));
}

// Mutual reprojection error of two calibrated cameras on a mesh.
inline double MutualReprojectionError(const TriangleMesh& mesh, const CameraIntrinsics& k1,
                                      const CameraPose& pose1, const CameraIntrinsics& k2,
                                      const CameraPose& pose2, int stride = 2) {
  const auto v1 = VisibleModelPoints(mesh, k1, pose1, stride);
  const auto v2 = VisibleModelPoints(mesh, k2, pose2, stride);
  return MutualReprojectionError(ComposeProjection(k1, pose1), ComposeProjection(k2, pose2),
                                 v1, v2);
}

struct GraphEdge {
  int i;
  int j;
  double delta;
};

struct CompatibilityGraph {
  std::vector<PoseHypothesis> nodes;
  std::vector<GraphEdge> edges;        // pairs with delta below threshold
  std::vector<GraphEdge> evaluated;    // every comparable pair
  double threshold = 0.0;

  std::vector<std::vector<int>> Adjacency() const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
      adj[static_cast<size_t>(e.i)].push_back(e.j);
      adj[static_cast<size_t>(e.j)].push_back(e.i);
    }
    return adj;
  }
};

// Camera used to render a hypothesis for its visibility set.
inline std::optional<std::pair<CameraIntrinsics, CameraPose>> HypothesisCamera(
    const PoseHypothesis& h, int width, int height) {
  if (h.decomposed) {
    auto cam = *h.decomposed;
    cam.first.width = width;
    cam.first.height = height;
    return cam;
  }
  try {
    return Decompose(h.projection, width, height);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Evaluates every pair of hypotheses; pairs whose error is below
// threshold_fraction * max(width, height) become edges. Hypotheses without a
// usable camera or without visible model points stay isolated.
inline CompatibilityGraph BuildGraph(std::vector<PoseHypothesis> hypotheses,
                                     const TriangleMesh& mesh, int width, int height,
                                     const VerifyParams& params = {}) {
  if (hypotheses.empty()) throw InputError("compatibility graph needs a hypothesis");
  CompatibilityGraph g;
  g.threshold = params.threshold_fraction * std::max(width, height);
  g.nodes = std::move(hypotheses);

  std::vector<std::vector<Vec3>> visible(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const auto cam = HypothesisCamera(g.nodes[i], width, height);
    if (!cam) continue;
    try {
      visible[i] = VisibleModelPoints(mesh, cam->first, cam->second, params.stride);
    } catch (const Error&) {
      visible[i].clear();
    }
  }
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    for (size_t j = i + 1; j < g.nodes.size(); ++j) {
      double delta = 0.0;
      try {
        delta = MutualReprojectionError(g.nodes[i].projection, g.nodes[j].projection,
                                        visible[i], visible[j]);
      } catch (const IncomparableError&) {
        continue;
      }
      const GraphEdge e{static_cast<int>(i), static_cast<int>(j), delta};
      g.evaluated.push_back(e);
      if (delta < g.threshold) g.edges.push_back(e);
    }
  }
  return g;
}

// Connected components by iterative depth-first search, each sorted by node
// index, ordered by first node index.
inline std::vector<std::vector<int>> ConnectedComponents(const CompatibilityGraph& g) {
  const auto adj = g.Adjacency();
  std::vector<int> seen(g.nodes.size(), 0);
  std::vector<std::vector<int>> components;
  for (size_t start = 0; start < g.nodes.size(); ++start) {
    if (seen[start]) continue;
    std::vector<int> comp;
    std::vector<int> stack{static_cast<int>(start)};
    seen[start] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (int w : adj[static_cast<size_t>(v)]) {
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = 1;
          stack.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

struct Selection {
  bool success = false;
  std::vector<int> component;  // largest component
  int selected = -1;           // node index of the chosen pose when successful
};

// Largest connected component (first one found on equal size); success if it
// has more than three nodes. The chosen pose has the largest consensus set,
// then the lower inlier RMSE, then the lower index.
inline Selection SelectPose(const CompatibilityGraph& g) {
  Selection sel;
  for (auto& comp : ConnectedComponents(g)) {
    if (comp.size() > sel.component.size()) sel.component = std::move(comp);
  }
  sel.success = sel.component.size() > 3;
  if (!sel.success) return sel;
  for (int idx : sel.component) {
    if (sel.selected < 0) {
      sel.selected = idx;
      continue;
    }
    const auto& cand = g.nodes[static_cast<size_t>(idx)];
    const auto& best = g.nodes[static_cast<size_t>(sel.selected)];
    if (cand.inliers.size() > best.inliers.size() ||
        (cand.inliers.size() == best.inliers.size() && cand.inlier_rmse < best.inlier_rmse)) {
      sel.selected = idx;
    }
  }
  return sel;
}

}  // namespace asgreg
