#pragma once

// Geometric and raster types shared by all modules.
//
// Conventions used throughout the library:
//  * Extrinsics map world to camera: X_cam = R * X_world + t.
//  * The camera looks along +z, image x points right and y points down.
//  * Pixel centers sit at integer coordinates with the origin at the top-left
//    pixel, so an image of width w spans [-0.5, w - 0.5] horizontally.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asgreg/errors.hpp"

namespace asgreg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

////////////////////////////////////////////////////////////////////////////////
// Mesh
////////////////////////////////////////////////////////////////////////////////

class TriangleMesh {
 public:
  using Face = std::array<int, 3>;

  TriangleMesh() = default;

  // Throws InputError if a face index is out of range or a face is
  // degenerate (area <= 1e-12).
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
      : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    const int n = static_cast<int>(vertices_.size());
    for (size_t f = 0; f < faces_.size(); ++f) {
      for (int idx : faces_[f]) {
        if (idx < 0 || idx >= n) {
          throw InputError("face " + std::to_string(f) +
                           " references vertex " + std::to_string(idx) +
                           " but the mesh has " + std::to_string(n) +
                           " vertices");
        }
      }
      if (FaceArea(f) <= 1e-12) {
        throw InputError("face " + std::to_string(f) + " is degenerate");
      }
    }
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  size_t NumFaces() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }

  const Vec3& Vertex(size_t face, int corner) const {
    return vertices_[faces_[face][corner]];
  }

  // Unnormalized normal, (v1 - v0) x (v2 - v0). Counter-clockwise winding
  // seen from outside points it outwards.
  Vec3 FaceNormalRaw(size_t face) const {
    return (Vertex(face, 1) - Vertex(face, 0))
        .cross(Vertex(face, 2) - Vertex(face, 0));
  }

  Vec3 FaceNormal(size_t face) const { return FaceNormalRaw(face).normalized(); }

  double FaceArea(size_t face) const { return 0.5 * FaceNormalRaw(face).norm(); }

  Eigen::AlignedBox3d BoundingBox() const {
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices_) box.extend(v);
    return box;
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
};

////////////////////////////////////////////////////////////////////////////////
// Cameras
////////////////////////////////////////////////////////////////////////////////

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;
  int width = 1;
  int height = 1;

  static CameraIntrinsics Create(double fx, double fy, double cx, double cy,
                                 int width, int height, double skew = 0.0) {
    CameraIntrinsics k{fx, fy, cx, cy, skew, width, height};
    k.Validate();
    return k;
  }

  void Validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw InputError("focal lengths must be positive");
    }
    if (width < 1 || height < 1) {
      throw InputError("image dimensions must be at least 1x1");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(skew)) {
      throw InputError("principal point and skew must be finite");
    }
  }

  Mat3 Matrix() const {
    Mat3 k;
    k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  // Ray direction with unit z-component through pixel (x, y).
  Vec3 Unproject(double x, double y) const {
    const double yn = (y - cy) / fy;
    const double xn = (x - cx - skew * yn) / fx;
    return Vec3(xn, yn, 1.0);
  }

  int LongestDimension() const { return std::max(width, height); }
};

class CameraPose {
 public:
  CameraPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  // Throws InputError unless `rotation` is orthonormal with determinant +1
  // to 1e-9.
  CameraPose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    const double orth =
        (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(orth < 1e-9) || !(std::abs(rotation_.determinant() - 1.0) < 1e-9)) {
      throw InputError("rotation is not a proper orthonormal matrix");
    }
    if (!translation_.allFinite()) {
      throw InputError("translation must be finite");
    }
  }

  // Re-orthonormalizes `rotation` through its SVD before validation.
  static CameraPose FromApproximateRotation(const Mat3& rotation,
                                            const Vec3& translation) {
    Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Mat3 u = svd.matrixU();
      u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    return CameraPose(r, translation);
  }

  // Pose of a camera at `eye` looking at `target`, with `up` mapped to -y.
  static CameraPose LookAt(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-12) throw InputError("look-at up vector parallel to view");
    x.normalize();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();
    return FromApproximateRotation(r, -r * eye);
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 Center() const { return -rotation_.transpose() * translation_; }
  Vec3 ToCamera(const Vec3& world) const { return rotation_ * world + translation_; }
  Vec3 ToWorld(const Vec3& cam) const {
    return rotation_.transpose() * (cam - translation_);
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Angle of the relative rotation between two poses, in radians.
inline double RotationAngleBetween(const CameraPose& a, const CameraPose& b) {
  const Mat3 rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; use the skew part there.
  const Vec3 s(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * s.norm(), c);
}

enum class DepthSign { kPositive, kNegative };

struct ProjectedPoint {
  Vec2 pixel;
  DepthSign depth_sign = DepthSign::kPositive;
};

class ProjectionMatrix {
 public:
  ProjectionMatrix() : matrix_(Mat34::Zero()) {
    matrix_.leftCols<3>().setIdentity();
  }

  // Throws InputError unless the left 3x3 block has full rank: its smallest
  // singular value must exceed 1e-10 after scaling the matrix to unit
  // Frobenius norm.
  explicit ProjectionMatrix(const Mat34& matrix) : matrix_(matrix) {
    if (!matrix_.allFinite()) throw InputError("projection matrix not finite");
    if (LeftBlockConditioning(matrix_) <= 1e-10) {
      throw InputError("projection matrix is rank deficient");
    }
  }

  // Smallest singular value of the left block of `m / ||m||_F`.
  static double LeftBlockConditioning(const Mat34& m) {
    const double norm = m.norm();
    if (!(norm > 0.0)) return 0.0;
    Eigen::JacobiSVD<Mat3> svd(m.leftCols<3>() / norm);
    return svd.singularValues()(2);
  }

  const Mat34& matrix() const { return matrix_; }

  ProjectionMatrix Scaled(double s) const { return ProjectionMatrix(matrix_ * s); }

  // Throws AtInfinityError if the point lies on the principal plane.
  ProjectedPoint Project(const Vec3& x) const {
    const Eigen::Vector3d p = matrix_.leftCols<3>() * x + matrix_.col(3);
    if (std::abs(p(2)) < 1e-12 * matrix_.norm()) {
      throw AtInfinityError("point lies on the principal plane");
    }
    ProjectedPoint out;
    out.pixel = Vec2(p(0) / p(2), p(1) / p(2));
    out.depth_sign = p(2) > 0 ? DepthSign::kPositive : DepthSign::kNegative;
    return out;
  }

  // Homogeneous third coordinate; positive in front of the camera for a
  // matrix with positive left-block determinant.
  double HomogeneousDepth(const Vec3& x) const {
    return matrix_.row(2).head<3>().dot(x) + matrix_(2, 3);
  }

 private:
  Mat34 matrix_;
};

inline ProjectionMatrix ComposeProjection(const CameraIntrinsics& k,
                                          const CameraPose& pose) {
  Mat34 rt;
  rt.leftCols<3>() = pose.rotation();
  rt.col(3) = pose.translation();
  return ProjectionMatrix(k.Matrix() * rt);
}

inline ProjectedPoint ProjectPoint(const ProjectionMatrix& p, const Vec3& x) {
  return p.Project(x);
}

// Relative Frobenius distance between two projection matrices after both are
// brought to unit norm with matching sign.
inline double ProjectionDistanceUpToScale(const Mat34& a, const Mat34& b) {
  const Mat34 na = a / a.norm();
  Mat34 nb = b / b.norm();
  if ((na - nb).norm() > (na + nb).norm()) nb = -nb;
  return (na - nb).norm();
}

////////////////////////////////////////////////////////////////////////////////
// Rasters
////////////////////////////////////////////////////////////////////////////////

// Row-major per-pixel storage with a validity mask.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, const T& fill = T{})
      : width_(width),
        height_(height),
        values_(static_cast<size_t>(Checked(width, height)), fill),
        valid_(values_.size(), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return values_.size(); }

  bool InBounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  size_t Index(int x, int y) const {
    return static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x);
  }

  const T& operator()(int x, int y) const { return values_[Index(x, y)]; }
  T& operator()(int x, int y) { return values_[Index(x, y)]; }

  bool valid(int x, int y) const { return valid_[Index(x, y)] != 0; }
  bool valid(size_t i) const { return valid_[i] != 0; }

  void Set(int x, int y, const T& value) {
    values_[Index(x, y)] = value;
    valid_[Index(x, y)] = 1;
  }
  void Invalidate(int x, int y, const T& fill = T{}) {
    values_[Index(x, y)] = fill;
    valid_[Index(x, y)] = 0;
  }
  void SetAllValid() { std::fill(valid_.begin(), valid_.end(), 1); }

  const std::vector<T>& values() const { return values_; }
  std::vector<T>& values() { return values_; }
  const std::vector<uint8_t>& validity() const { return valid_; }

  size_t CountValid() const {
    size_t n = 0;
    for (uint8_t v : valid_) n += v;
    return n;
  }

  bool SameShape(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool SameShape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

 private:
  static long Checked(int w, int h) {
    if (w < 0 || h < 0) throw InputError("negative raster dimensions");
    return static_cast<long>(w) * h;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
  std::vector<uint8_t> valid_;
};

// Camera-frame unit normals.
class NormalMap : public Raster<Vec3> {
 public:
  using Raster::Raster;
  void Validate() const {
    for (size_t i = 0; i < size(); ++i) {
      if (valid(i) && std::abs(values()[i].norm() - 1.0) > 1e-6) {
        throw InputError("normal map contains a non-unit normal");
      }
    }
  }
};

// Depth along the optical axis.
class DepthMap : public Raster<double> {
 public:
  using Raster::Raster;
  void Validate() const {
    for (size_t i = 0; i < size(); ++i) {
      if (valid(i) && !(values()[i] > 0.0)) {
        throw InputError("depth map contains a non-positive valid depth");
      }
    }
  }
};

class GradientImage : public Raster<double> {
 public:
  using Raster::Raster;
  void Validate() const {
    for (size_t i = 0; i < size(); ++i) {
      const double v = values()[i];
      if (!std::isfinite(v) || v < 0.0 || (!valid(i) && v != 0.0)) {
        throw InputError("gradient image violates magnitude invariants");
      }
    }
  }
};

// Gray-value photograph; every pixel is valid.
class IntensityImage : public Raster<double> {
 public:
  IntensityImage() = default;
  IntensityImage(int width, int height, double fill = 0.0)
      : Raster(width, height, fill) {
    SetAllValid();
  }
};

using Mask = Raster<uint8_t>;

////////////////////////////////////////////////////////////////////////////////
// Filters and lights
////////////////////////////////////////////////////////////////////////////////

// Pair of 3x3 correlation stencils, indexed [row][col] with the center at
// [1][1]. Both must sum to zero.
struct DerivativeKernel {
  std::array<std::array<double, 3>, 3> hx{};
  std::array<std::array<double, 3>, 3> hy{};

  static DerivativeKernel CentralDifference() {
    DerivativeKernel k;
    k.hx[1][0] = -0.5;
    k.hx[1][2] = 0.5;
    k.hy[0][1] = -0.5;
    k.hy[2][1] = 0.5;
    return k;
  }

  static DerivativeKernel Create(const std::array<std::array<double, 3>, 3>& hx,
                                 const std::array<std::array<double, 3>, 3>& hy) {
    DerivativeKernel k{hx, hy};
    k.Validate();
    return k;
  }

  void Validate() const {
    double sx = 0.0, sy = 0.0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        sx += hx[r][c];
        sy += hy[r][c];
      }
    }
    if (std::abs(sx) > 1e-12 || std::abs(sy) > 1e-12) {
      throw InputError("derivative stencils must sum to zero");
    }
  }

  // Whether tap (dx, dy) carries a nonzero weight in either stencil.
  bool Uses(int dx, int dy) const {
    return hx[dy + 1][dx + 1] != 0.0 || hy[dy + 1][dx + 1] != 0.0;
  }
};

class LightDirection {
 public:
  explicit LightDirection(const Vec3& dir) : dir_(dir) {
    if (!(std::abs(dir_.norm() - 1.0) < 1e-9)) {
      throw InputError("light direction must have unit length");
    }
  }
  const Vec3& direction() const { return dir_; }

 private:
  Vec3 dir_;
};

}  // namespace asgreg
