#pragma once

// Z-buffered software rasterization of a triangle mesh into camera-frame
// normal, depth and face-index maps.

#include <limits>
#include <vector>

#include "asgreg/types.hpp"

namespace asgreg {

struct RenderOutput {
  NormalMap normals;
  DepthMap depth;
  Raster<int> face_ids;  // -1 where nothing is visible
  bool camera_inside_bounds = false;

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool valid(int x, int y) const { return depth.valid(x, y); }
};

namespace internal {

inline constexpr double kNearPlane = 1e-6;
inline constexpr double kDepthTieEpsilon = 1e-9;

struct ScreenVertex {
  double x;
  double y;
};

// Clips a camera-frame polygon against z >= kNearPlane.
inline std::vector<Vec3> ClipNear(const std::vector<Vec3>& poly) {
  std::vector<Vec3> out;
  out.reserve(poly.size() + 2);
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    const bool ina = a.z() >= kNearPlane;
    const bool inb = b.z() >= kNearPlane;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double s = (kNearPlane - a.z()) / (b.z() - a.z());
      Vec3 p = a + s * (b - a);
      p.z() = kNearPlane;
      out.push_back(p);
    }
  }
  return out;
}

// Edge function of the directed edge a->b at p. Evaluated with the endpoints
// in a canonical order so that the two triangles sharing an edge see exactly
// negated values.
inline double EdgeFunction(const ScreenVertex& a, const ScreenVertex& b,
                           double px, double py) {
  const bool swap = (b.y < a.y) || (b.y == a.y && b.x < a.x);
  const ScreenVertex& s = swap ? b : a;
  const ScreenVertex& e = swap ? a : b;
  const double w = (e.x - s.x) * (py - s.y) - (e.y - s.y) * (px - s.x);
  return swap ? -w : w;
}

// Top-left rule for triangles with positive signed area in y-down screen
// space (clockwise on screen).
inline bool IsTopLeft(const ScreenVertex& a, const ScreenVertex& b) {
  const bool top = a.y == b.y && b.x > a.x;
  const bool left = b.y < a.y;
  return top || left;
}

}  // namespace internal

// Renders `mesh` seen by camera (k, pose). Faces are one-sided: a face is drawn
// only where its outward normal (counter-clockwise winding) faces the camera,
// so normals in the output always satisfy n . view < 0. Depth is the exact
// ray-plane intersection at each pixel center. Equal depths (within 1e-9) go
// to the lower face index.
inline RenderOutput Render(const TriangleMesh& mesh, const CameraIntrinsics& k,
                           const CameraPose& pose) {
  using internal::ScreenVertex;
  if (mesh.empty()) throw InputError("cannot render an empty mesh");
  k.Validate();

  const int w = k.width;
  const int h = k.height;
  RenderOutput out{NormalMap(w, h, Vec3::Zero()), DepthMap(w, h, 0.0),
                   Raster<int>(w, h, -1), false};
  out.camera_inside_bounds = mesh.BoundingBox().contains(pose.Center());

  std::vector<double> zbuf(static_cast<size_t>(w) * h,
                           std::numeric_limits<double>::infinity());
  const Vec3 center = pose.Center();
  const Mat3& r = pose.rotation();

  for (size_t f = 0; f < mesh.NumFaces(); ++f) {
    const Vec3 n_world = mesh.FaceNormalRaw(f);
    if (n_world.dot(mesh.Vertex(f, 0) - center) >= 0.0) continue;  // back face

    std::vector<Vec3> poly = {pose.ToCamera(mesh.Vertex(f, 0)),
                              pose.ToCamera(mesh.Vertex(f, 1)),
                              pose.ToCamera(mesh.Vertex(f, 2))};
    const Vec3 n_cam = (r * n_world).normalized();
    const double plane_d = n_cam.dot(poly[0]);

    poly = internal::ClipNear(poly);
    if (poly.size() < 3) continue;

    std::vector<ScreenVertex> screen;
    screen.reserve(poly.size());
    for (const Vec3& p : poly) {
      const double xn = p.x() / p.z();
      const double yn = p.y() / p.z();
      screen.push_back({k.fx * xn + k.skew * yn + k.cx, k.fy * yn + k.cy});
    }

    for (size_t tri = 1; tri + 1 < screen.size(); ++tri) {
      ScreenVertex v0 = screen[0];
      ScreenVertex v1 = screen[tri];
      ScreenVertex v2 = screen[tri + 1];
      const double area = (v1.x - v0.x) * (v2.y - v0.y) - (v1.y - v0.y) * (v2.x - v0.x);
      if (area == 0.0 || !std::isfinite(area)) continue;
      if (area < 0.0) std::swap(v1, v2);

      const double min_x = std::min({v0.x, v1.x, v2.x});
      const double max_x = std::max({v0.x, v1.x, v2.x});
      const double min_y = std::min({v0.y, v1.y, v2.y});
      const double max_y = std::max({v0.y, v1.y, v2.y});
      const int x0 = std::max(0, static_cast<int>(std::ceil(std::max(min_x, -1.0))));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(std::min(max_x, double(w)))));
      const int y0 = std::max(0, static_cast<int>(std::ceil(std::max(min_y, -1.0))));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(std::min(max_y, double(h)))));
      if (x0 > x1 || y0 > y1) continue;

      const bool tl01 = internal::IsTopLeft(v0, v1);
      const bool tl12 = internal::IsTopLeft(v1, v2);
      const bool tl20 = internal::IsTopLeft(v2, v0);

      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double e01 = internal::EdgeFunction(v0, v1, x, y);
          const double e12 = internal::EdgeFunction(v1, v2, x, y);
          const double e20 = internal::EdgeFunction(v2, v0, x, y);
          const bool inside = (e01 > 0 || (e01 == 0 && tl01)) &&
                              (e12 > 0 || (e12 == 0 && tl12)) &&
                              (e20 > 0 || (e20 == 0 && tl20));
          if (!inside) continue;

          const Vec3 ray = k.Unproject(x, y);
          const double denom = n_cam.dot(ray);
          if (denom >= 0.0) continue;
          const double z = plane_d / denom;
          if (!(z > 0.0) || !std::isfinite(z)) continue;

          const size_t idx = out.depth.Index(x, y);
          const double current = zbuf[idx];
          const int current_face = out.face_ids(x, y);
          const bool nearer = z < current - internal::kDepthTieEpsilon;
          const bool tie_wins = std::abs(z - current) <= internal::kDepthTieEpsilon &&
                                static_cast<int>(f) < current_face;
          if (nearer || tie_wins) {
            zbuf[idx] = z;
            out.depth.Set(x, y, z);
            out.normals.Set(x, y, n_cam);
            out.face_ids.Set(x, y, static_cast<int>(f));
          }
        }
      }
    }
  }
  return out;
}

inline std::vector<PixelCoord> VisiblePixelSet(const RenderOutput& output) {
  std::vector<PixelCoord> pixels;
  for (int y = 0; y < output.height(); ++y) {
    for (int x = 0; x < output.width(); ++x) {
      if (output.valid(x, y)) pixels.push_back({x, y});
    }
  }
  return pixels;
}

// World point seen at pixel (x, y) with the given depth.
inline Vec3 BackprojectPixel(double x, double y, double depth,
                             const CameraIntrinsics& k, const CameraPose& pose) {
  return pose.ToWorld(depth * k.Unproject(x, y));
}

// One world point per valid depth pixel, in row-major pixel order. With
// `stride` > 1 only pixels whose coordinates are multiples of the stride are
// used.
inline std::vector<Vec3> Backproject(const DepthMap& depth, const CameraIntrinsics& k,
                                     const CameraPose& pose, int stride = 1) {
  if (!depth.SameShape(k.width, k.height)) {
    throw InputError("depth map does not match the intrinsics image size");
  }
  if (stride < 1) throw InputError("stride must be positive");
  std::vector<Vec3> points;
  for (int y = 0; y < depth.height(); y += stride) {
    for (int x = 0; x < depth.width(); x += stride) {
      if (depth.valid(x, y)) points.push_back(BackprojectPixel(x, y, depth(x, y), k, pose));
    }
  }
  return points;
}

// Camera-frame points (no world transform) for each valid pixel.
inline std::vector<Vec3> BackprojectCameraFrame(const DepthMap& depth,
                                                const CameraIntrinsics& k,
                                                int stride = 1) {
  return Backproject(depth, k, CameraPose(), stride);
}

}  // namespace asgreg
