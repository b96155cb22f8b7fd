#pragma once

// Procedural building-like test scenes with a ring of ground-truth cameras and
// rendered query rasters.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "asgreg/asg.hpp"
#include "asgreg/rasterizer.hpp"

namespace asgreg {

// Accumulates closed, outward-oriented primitives into one triangle list.
class MeshBuilder {
 public:
  // Axis-aligned box; `with_bottom` = false leaves the face at z = lo.z open.
  void AddBox(const Vec3& lo, const Vec3& hi, bool with_bottom = true) {
    const int b = Base();
    for (int i = 0; i < 8; ++i) {
      vertices_.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                             i & 4 ? hi.z() : lo.z());
    }
    AddQuad(b, 0, 4, 6, 2);  // x = lo
    AddQuad(b, 1, 3, 7, 5);  // x = hi
    AddQuad(b, 0, 1, 5, 4);  // y = lo
    AddQuad(b, 2, 6, 7, 3);  // y = hi
    AddQuad(b, 4, 5, 7, 6);  // top
    if (with_bottom) AddQuad(b, 0, 2, 3, 1);
  }

  // Gable roof over [lo.x, hi.x] x [lo.y, hi.y] starting at height lo.z with
  // the ridge at hi.z running along x.
  void AddGableRoof(const Vec3& lo, const Vec3& hi) {
    const int b = Base();
    const double ym = 0.5 * (lo.y() + hi.y());
    vertices_.emplace_back(lo.x(), lo.y(), lo.z());  // 0
    vertices_.emplace_back(hi.x(), lo.y(), lo.z());  // 1
    vertices_.emplace_back(hi.x(), hi.y(), lo.z());  // 2
    vertices_.emplace_back(lo.x(), hi.y(), lo.z());  // 3
    vertices_.emplace_back(lo.x(), ym, hi.z());      // 4
    vertices_.emplace_back(hi.x(), ym, hi.z());      // 5
    AddQuad(b, 0, 1, 5, 4);        // slope facing -y
    AddQuad(b, 2, 3, 4, 5);        // slope facing +y
    AddTri(b, 0, 4, 3);            // gable at x = lo
    AddTri(b, 1, 2, 5);            // gable at x = hi
    AddQuad(b, 0, 3, 2, 1);        // underside
  }

  TriangleMesh Build() const { return TriangleMesh(vertices_, faces_); }

 private:
  int Base() const { return static_cast<int>(vertices_.size()); }
  void AddTri(int b, int i, int j, int k) { faces_.push_back({b + i, b + j, b + k}); }
  void AddQuad(int b, int i, int j, int k, int l) {
    AddTri(b, i, j, k);
    AddTri(b, i, k, l);
  }

  std::vector<Vec3> vertices_;
  std::vector<TriangleMesh::Face> faces_;
};

struct SceneOptions {
  double depth_noise_sigma = 0.0;  // additive Gaussian noise on query depth
  int width = 505;
  int height = 275;
  double focal = 450.0;
};

struct SyntheticScene {
  std::string name;
  TriangleMesh mesh;
  CameraIntrinsics intrinsics;
  std::vector<CameraPose> cameras;  // ground truth
  std::vector<DepthMap> depths;     // query depth per camera
  std::vector<IntensityImage> images;  // Lambertian shading per camera
  Vec3 target = Vec3::Zero();
};

namespace internal {

inline TriangleMesh HouseMesh() {
  MeshBuilder b;
  b.AddBox({-15, -15, -0.5}, {15, 15, 0});
  // Main body and roof.
  b.AddBox({-4, -3, 0}, {4, 3, 5});
  b.AddGableRoof({-4.4, -3.4, 5}, {4.4, 3.4, 7.5});
  b.AddBox({1.8, 0.8, 5.5}, {2.6, 1.6, 8.2});  // chimney
  // Annex with a flat roof.
  b.AddBox({4, -2, 0}, {8, 2, 3});
  b.AddBox({3.9, -2.2, 3}, {8.2, 2.2, 3.3});
  // Door and windows protrude from the walls.
  b.AddBox({-0.7, -3.15, 0}, {0.7, -3, 2.2});
  for (double x : {-2.8, 1.6}) {
    b.AddBox({x, -3.15, 1.2}, {x + 1.2, -3, 2.4});
    b.AddBox({x, -3.15, 3.2}, {x + 1.2, -3, 4.2});
  }
  for (double x : {-2.5, 1.0}) b.AddBox({x, 3, 2.0}, {x + 1.5, 3.15, 3.5});
  b.AddBox({-4.15, -1.0, 1.5}, {-4, 1.0, 3.5});
  b.AddBox({5.0, -2.15, 1.0}, {6.5, -2, 2.2});
  b.AddBox({8, -0.8, 0}, {8.15, 0.8, 2.0});
  return b.Build();
}

inline TriangleMesh BlocksMesh() {
  MeshBuilder b;
  b.AddBox({-15, -15, -0.5}, {15, 15, 0});
  b.AddBox({-6, -4, 0}, {-1, 1, 6});
  b.AddBox({-5.5, -3.5, 6}, {-1.5, 0.5, 7});
  b.AddBox({0, -5, 0}, {4, -1, 3});
  b.AddBox({1, 0, 0}, {7, 4, 4.5});
  b.AddGableRoof({1, 0, 4.5}, {7, 4, 6});
  b.AddBox({-3, 2, 0}, {0, 5, 2});
  b.AddBox({5, -4, 0}, {6.5, -2.5, 8});
  for (double z : {1.0, 2.5, 4.0}) b.AddBox({-4.5, -4.15, z}, {-2.5, -4, z + 0.8});
  for (double z : {1.0, 2.5, 4.0, 5.5}) b.AddBox({5.3, -4.15, z}, {6.2, -4, z + 0.7});
  b.AddBox({1.5, -5.15, 0.8}, {3.5, -5, 2.0});
  return b.Build();
}

inline TriangleMesh CourtyardMesh() {
  MeshBuilder b;
  b.AddBox({-15, -15, -0.5}, {15, 15, 0});
  b.AddBox({-7, 3, 0}, {7, 6, 5});    // back wing
  b.AddGableRoof({-7.3, 2.7, 5}, {7.3, 6.3, 6.8});
  b.AddBox({-7, -5, 0}, {-4, 3, 4});  // left wing
  b.AddBox({4, -5, 0}, {7, 3, 4});    // right wing
  b.AddBox({-7.2, -5.2, 4}, {-3.8, 3, 4.3});
  b.AddBox({3.8, -5.2, 4}, {7.2, 3, 4.3});
  b.AddBox({-1, -1, 0}, {1, 1, 1});  // fountain
  b.AddBox({-0.3, -0.3, 1}, {0.3, 0.3, 2});
  for (double x : {-5.5, -2.5, 0.5, 3.5}) b.AddBox({x, 2.85, 1.2}, {x + 1.5, 3, 2.6});
  for (double y : {-3.5, 0.0}) {
    b.AddBox({-4, y, 1.2}, {-3.85, y + 1.5, 2.6});
    b.AddBox({3.85, y, 1.2}, {4, y + 1.5, 2.6});
  }
  return b.Build();
}

inline IntensityImage ShadeNormals(const NormalMap& normals, const CameraPose& pose) {
  // Fixed light from above and slightly in front of the camera, in world space.
  const Vec3 light = Vec3(0.3, -0.5, 1.0).normalized();
  IntensityImage img(normals.width(), normals.height(), 30.0);
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      if (!normals.valid(x, y)) continue;
      const Vec3 n_world = pose.rotation().transpose() * normals(x, y);
      img(x, y) = 60.0 + 180.0 * std::max(0.0, n_world.dot(light));
    }
  }
  return img;
}

}  // namespace internal

inline const std::vector<std::string>& SceneNames() {
  static const std::vector<std::string> names{"house", "blocks", "courtyard"};
  return names;
}

// Builds the named scene. The seed sets the azimuth phase of the camera ring
// and the depth noise; the mesh is fixed per name.
inline SyntheticScene MakeSyntheticScene(const std::string& name, uint64_t seed,
                                         const SceneOptions& options = {}) {
  SyntheticScene scene;
  scene.name = name;
  if (name == "house") {
    scene.mesh = internal::HouseMesh();
    scene.target = Vec3(2, 0, 3);
  } else if (name == "blocks") {
    scene.mesh = internal::BlocksMesh();
    scene.target = Vec3(0.5, 0, 3);
  } else if (name == "courtyard") {
    scene.mesh = internal::CourtyardMesh();
    scene.target = Vec3(0, 0, 2.5);
  } else {
    throw InputError("unknown scene '" + name + "' (expected house, blocks or courtyard)");
  }
  if (options.depth_noise_sigma < 0) throw InputError("depth noise must be non-negative");
  scene.intrinsics = CameraIntrinsics::Create(options.focal, options.focal,
                                              (options.width - 1) / 2.0,
                                              (options.height - 1) / 2.0, options.width,
                                              options.height);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi / 8.0);
  const double phase = phase_dist(rng);
  const double radius = 17.0;
  for (double height : {2.0, 8.0, 15.0}) {
    for (int a = 0; a < 8; ++a) {
      const double az = phase + a * 2.0 * std::numbers::pi / 8.0;
      const Vec3 eye = scene.target + Vec3(radius * std::cos(az), radius * std::sin(az), 0.0);
      scene.cameras.push_back(
          CameraPose::LookAt(Vec3(eye.x(), eye.y(), height), scene.target, Vec3::UnitZ()));
    }
  }

  std::normal_distribution<double> noise(0.0, options.depth_noise_sigma);
  for (const CameraPose& pose : scene.cameras) {
    RenderOutput out = Render(scene.mesh, scene.intrinsics, pose);
    if (options.depth_noise_sigma > 0) {
      for (int y = 0; y < out.depth.height(); ++y) {
        for (int x = 0; x < out.depth.width(); ++x) {
          if (out.depth.valid(x, y)) {
            out.depth(x, y) = std::max(1e-6, out.depth(x, y) + noise(rng));
          }
        }
      }
    }
    scene.images.push_back(internal::ShadeNormals(out.normals, pose));
    scene.depths.push_back(std::move(out.depth));
  }
  return scene;
}

}  // namespace asgreg
