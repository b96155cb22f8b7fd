#pragma once

// Point-to-point ICP used as the comparison baseline. The spatial index is a
// Boost.Geometry R-tree.

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "asgreg/types.hpp"

namespace asgreg {

struct IcpResult {
  CameraPose pose;
  int iterations = 0;
  std::vector<double> mse_history;  // before each update, then the final value
};

namespace internal {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using RtreePoint = bg::model::point<double, 3, bg::cs::cartesian>;
using RtreeValue = std::pair<RtreePoint, unsigned>;

inline RtreePoint ToRtree(const Vec3& p) { return RtreePoint(p.x(), p.y(), p.z()); }

}  // namespace internal

class PointCloudIndex {
 public:
  explicit PointCloudIndex(std::span<const Vec3> points)
      : points_(points.begin(), points.end()) {
    std::vector<internal::RtreeValue> values;
    values.reserve(points_.size());
    for (size_t i = 0; i < points_.size(); ++i) {
      values.emplace_back(internal::ToRtree(points_[i]), static_cast<unsigned>(i));
    }
    tree_ = Tree(values.begin(), values.end());
  }

  size_t Nearest(const Vec3& q) const {
    std::vector<internal::RtreeValue> result;
    tree_.query(internal::bgi::nearest(internal::ToRtree(q), 1), std::back_inserter(result));
    return result.front().second;
  }

  const Vec3& point(size_t i) const { return points_[i]; }
  size_t size() const { return points_.size(); }

 private:
  using Tree = internal::bgi::rtree<internal::RtreeValue, internal::bgi::quadratic<16>>;
  std::vector<Vec3> points_;
  Tree tree_;
};

// Estimates the world-to-camera pose that aligns `source_cam` (points in the
// camera frame, e.g. a backprojected depth map) with `target_world` (model
// points). Each iteration pairs every source point, mapped to the world by the
// current pose, with its nearest target point, then solves the closed-form
// rigid alignment (SVD of the cross-covariance). Stops when the mean squared
// distance improves by less than `convergence_eps` or after `max_iterations`.
inline IcpResult IcpBaseline(std::span<const Vec3> source_cam, const PointCloudIndex& target,
                             const CameraPose& initial, int max_iterations = 50,
                             double convergence_eps = 1e-10) {
  if (source_cam.empty() || target.size() == 0) {
    throw InputError("ICP needs non-empty point clouds");
  }
  IcpResult result{initial, 0, {}};
  double prev_mse = std::numeric_limits<double>::infinity();
  Eigen::Matrix3Xd src(3, source_cam.size());
  Eigen::Matrix3Xd dst(3, source_cam.size());

  for (int it = 0; it < max_iterations; ++it) {
    double mse = 0.0;
    for (size_t i = 0; i < source_cam.size(); ++i) {
      const Vec3 w = result.pose.ToWorld(source_cam[i]);
      const Vec3& nn = target.point(target.Nearest(w));
      mse += (w - nn).squaredNorm();
      src.col(static_cast<long>(i)) = nn;
      dst.col(static_cast<long>(i)) = source_cam[i];
    }
    mse /= static_cast<double>(source_cam.size());
    result.mse_history.push_back(mse);
    if (prev_mse - mse < convergence_eps && it > 0) break;
    prev_mse = mse;

    // Require three non-collinear matched points.
    const Eigen::Vector3d mean = src.rowwise().mean();
    const Eigen::Matrix3Xd centered = src.colwise() - mean;
    Eigen::JacobiSVD<Mat3> svd(centered * centered.transpose());
    if (svd.singularValues()(1) <= 1e-12 * std::max(1.0, svd.singularValues()(0))) {
      throw AlignmentError("ICP correspondences are collinear");
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    result.pose = CameraPose::FromApproximateRotation(t.topLeftCorner<3, 3>(),
                                                      t.block<3, 1>(0, 3));
    result.iterations = it + 1;
  }
  return result;
}

inline IcpResult IcpBaseline(std::span<const Vec3> source_cam,
                             std::span<const Vec3> target_world, const CameraPose& initial,
                             int max_iterations = 50, double convergence_eps = 1e-10) {
  return IcpBaseline(source_cam, PointCloudIndex(target_world), initial, max_iterations,
                     convergence_eps);
}

// Area-weighted uniform samples on the mesh surface (plus all vertices).
inline std::vector<Vec3> SampleMeshSurface(const TriangleMesh& mesh, double spacing,
                                           uint64_t seed) {
  if (!(spacing > 0)) throw InputError("sampling spacing must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> pts(mesh.vertices());
  for (size_t f = 0; f < mesh.NumFaces(); ++f) {
    const double expected = mesh.FaceArea(f) / (spacing * spacing);
    int count = static_cast<int>(std::floor(expected));
    if (uni(rng) < expected - count) ++count;
    for (int s = 0; s < count; ++s) {
      double a = uni(rng);
      double b = uni(rng);
      if (a + b > 1.0) {
        a = 1.0 - a;
        b = 1.0 - b;
      }
      pts.push_back(mesh.Vertex(f, 0) + a * (mesh.Vertex(f, 1) - mesh.Vertex(f, 0)) +
                    b * (mesh.Vertex(f, 2) - mesh.Vertex(f, 0)));
    }
  }
  return pts;
}

}  // namespace asgreg
