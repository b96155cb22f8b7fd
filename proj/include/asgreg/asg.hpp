#pragma once

// Average Shading Gradients: the light-averaged gradient magnitude of a
// Lambertian rendering, computed from a normal map alone. Also holds the
// depth-to-normal conversion and the intensity-gradient fallback used for the
// query photograph.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "asgreg/types.hpp"

namespace asgreg {

struct AsgConfig {
  DerivativeKernel kernel = DerivativeKernel::CentralDifference();
  int mc_sample_count = 100000;  // Monte Carlo oracle only
  uint64_t rng_seed = 0;

  void Validate() const {
    kernel.Validate();
    if (mc_sample_count < 1) throw InputError("mc_sample_count must be >= 1");
  }
};

namespace internal {

// Kernel responses (h_x * n, h_y * n) of a normal map at (x, y), or nullopt if
// any used tap is invalid or outside the raster.
struct NormalDerivatives {
  Vec3 dx;
  Vec3 dy;
};

inline std::optional<NormalDerivatives> NormalKernelResponse(
    const NormalMap& normals, const DerivativeKernel& kernel, int x, int y) {
  if (!normals.valid(x, y)) return std::nullopt;
  NormalDerivatives d{Vec3::Zero(), Vec3::Zero()};
  for (int oy = -1; oy <= 1; ++oy) {
    for (int ox = -1; ox <= 1; ++ox) {
      if (!kernel.Uses(ox, oy)) continue;
      const int sx = x + ox;
      const int sy = y + oy;
      if (!normals.InBounds(sx, sy) || !normals.valid(sx, sy)) return std::nullopt;
      const Vec3& n = normals(sx, sy);
      d.dx += kernel.hx[oy + 1][ox + 1] * n;
      d.dy += kernel.hy[oy + 1][ox + 1] * n;
    }
  }
  return d;
}

// Uniform directions on the unit sphere from normalized Gaussian draws.
inline std::vector<Vec3> SampleSphere(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<size_t>(count));
  while (static_cast<int>(dirs.size()) < count) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    const double len = v.norm();
    if (len < 1e-12) continue;
    dirs.push_back(v / len);
  }
  return dirs;
}

inline constexpr double kSphereArea = 4.0 * std::numbers::pi;

}  // namespace internal

// sqrt(pi/3) * sqrt(sum_i (h_x * n_i)^2 + (h_y * n_i)^2) per pixel. A pixel is
// valid only if every kernel tap it uses lands on a valid normal.
inline GradientImage AsgClosedForm(const NormalMap& normals, const AsgConfig& cfg = {}) {
  cfg.kernel.Validate();
  const double scale = std::sqrt(std::numbers::pi / 3.0);
  GradientImage out(normals.width(), normals.height(), 0.0);
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      const auto d = internal::NormalKernelResponse(normals, cfg.kernel, x, y);
      if (!d) continue;
      out.Set(x, y, scale * std::sqrt(d->dx.squaredNorm() + d->dy.squaredNorm()));
    }
  }
  return out;
}

// Monte Carlo estimate over uniformly sampled light directions l.
//
// clamped = true averages the gradient magnitude of the Lambertian image
// max(0, -n.l) over the sphere. clamped = false drops the clamp and estimates
// 1/2 * sqrt(int_S (h_x * n.l)^2 + (h_y * n.l)^2 dl), which equals the closed
// form exactly in expectation. Every pixel uses the same direction set, so the
// result is a deterministic function of (seed, sample count).
inline GradientImage AsgMonteCarlo(const NormalMap& normals, const AsgConfig& cfg,
                                   bool clamped) {
  cfg.Validate();
  const std::vector<Vec3> dirs =
      internal::SampleSphere(cfg.mc_sample_count, cfg.rng_seed);
  const double inv_count = 1.0 / static_cast<double>(dirs.size());

  // Sample second-moment matrix; the unclamped integrand is the quadratic form
  // l^T (g_x g_x^T + g_y g_y^T) l, so its sample mean is tr(A * S).
  Mat3 moment = Mat3::Zero();
  if (!clamped) {
    for (const Vec3& l : dirs) moment += l * l.transpose();
    moment *= inv_count;
  }

  GradientImage out(normals.width(), normals.height(), 0.0);
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      if (!internal::NormalKernelResponse(normals, cfg.kernel, x, y)) continue;
      if (!clamped) {
        const auto d = internal::NormalKernelResponse(normals, cfg.kernel, x, y);
        const Mat3 a = d->dx * d->dx.transpose() + d->dy * d->dy.transpose();
        const double mean = (a * moment).trace();
        out.Set(x, y, 0.5 * std::sqrt(internal::kSphereArea * std::max(0.0, mean)));
        continue;
      }
      double acc = 0.0;
      for (const Vec3& l : dirs) {
        double gx = 0.0;
        double gy = 0.0;
        for (int oy = -1; oy <= 1; ++oy) {
          for (int ox = -1; ox <= 1; ++ox) {
            if (!cfg.kernel.Uses(ox, oy)) continue;
            const double shade = std::max(0.0, -normals(x + ox, y + oy).dot(l));
            gx += cfg.kernel.hx[oy + 1][ox + 1] * shade;
            gy += cfg.kernel.hy[oy + 1][ox + 1] * shade;
          }
        }
        acc += std::sqrt(gx * gx + gy * gy);
      }
      out.Set(x, y, acc * inv_count);
    }
  }
  return out;
}

// Camera-frame normals from a depth map: cross product of central-difference
// tangents of the backprojected surface, oriented toward the camera. Pixels
// with any invalid or out-of-range 4-neighbor are invalid.
inline NormalMap NormalsFromDepth(const DepthMap& depth, const CameraIntrinsics& k) {
  if (!depth.SameShape(k.width, k.height)) {
    throw InputError("depth map does not match the intrinsics image size");
  }
  const int w = depth.width();
  const int h = depth.height();
  auto point = [&](int x, int y) -> Vec3 { return depth(x, y) * k.Unproject(x, y); };
  auto usable = [&](int x, int y) { return depth.InBounds(x, y) && depth.valid(x, y); };

  NormalMap out(w, h, Vec3::Zero());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!usable(x, y) || !usable(x - 1, y) || !usable(x + 1, y) ||
          !usable(x, y - 1) || !usable(x, y + 1)) {
        continue;
      }
      const Vec3 tx = point(x + 1, y) - point(x - 1, y);
      const Vec3 ty = point(x, y + 1) - point(x, y - 1);
      Vec3 n = tx.cross(ty);
      const double len = n.norm();
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      n /= len;
      if (n.dot(point(x, y)) > 0.0) n = -n;
      out.Set(x, y, n);
    }
  }
  return out;
}

// sqrt((h_x * I)^2 + (h_y * I)^2) with replicate padding at the borders.
inline GradientImage IntensityGradient(const IntensityImage& image,
                                       const DerivativeKernel& kernel) {
  kernel.Validate();
  const int w = image.width();
  const int h = image.height();
  GradientImage out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0;
      double gy = 0.0;
      for (int oy = -1; oy <= 1; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          if (!kernel.Uses(ox, oy)) continue;
          const double v = image(std::clamp(x + ox, 0, w - 1), std::clamp(y + oy, 0, h - 1));
          gx += kernel.hx[oy + 1][ox + 1] * v;
          gy += kernel.hy[oy + 1][ox + 1] * v;
        }
      }
      out.Set(x, y, std::sqrt(gx * gx + gy * gy));
    }
  }
  return out;
}

// Gradient representation of the query photograph: ASG of depth-derived
// normals when a depth map is available, plain intensity gradients otherwise.
inline GradientImage QueryGradient(const IntensityImage& image,
                                   const std::optional<DepthMap>& depth,
                                   const CameraIntrinsics& k, const AsgConfig& cfg = {}) {
  if (depth) {
    if (!depth->SameShape(image)) {
      throw InputError("query image and depth map dimensions differ");
    }
    return AsgClosedForm(NormalsFromDepth(*depth, k), cfg);
  }
  return IntensityGradient(image, cfg.kernel);
}

}  // namespace asgreg
