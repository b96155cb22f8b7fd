#pragma once

// Dense SIFT descriptors on gradient-magnitude images and a coarse-to-fine
// SIFT-flow matcher (dual-layer min-sum belief propagation with decoupled
// truncated-L1 smoothness), plus the bidirectional consistency check and the
// lifting of matched pixels to 2D-3D correspondences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <vector>

#include "asgreg/rasterizer.hpp"
#include "asgreg/types.hpp"

namespace asgreg {

inline constexpr int kSiftCells = 4;
inline constexpr int kSiftBins = 8;
inline constexpr int kSiftDims = kSiftCells * kSiftCells * kSiftBins;

struct DenseSiftField {
  int width = 0;
  int height = 0;
  int cell_size = 4;
  int orientation_bins = kSiftBins;
  std::vector<float> data;      // width * height * 128, row-major pixels
  std::vector<uint8_t> valid;   // width * height

  const float* Descriptor(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * kSiftDims;
  }
  bool IsValid(int x, int y) const { return valid[static_cast<size_t>(y) * width + x] != 0; }
};

// L1 distance between the descriptors at `pa` in `a` and `pb` in `b`.
inline double DescriptorDistance(const DenseSiftField& a, PixelCoord pa, const DenseSiftField& b,
                                 PixelCoord pb) {
  const float* da = a.Descriptor(pa.x, pa.y);
  const float* db = b.Descriptor(pb.x, pb.y);
  double d = 0.0;
  for (int i = 0; i < kSiftDims; ++i) d += std::abs(static_cast<double>(da[i]) - db[i]);
  return d;
}

struct FlowVector {
  int u = 0;
  int v = 0;
  friend bool operator==(const FlowVector&, const FlowVector&) = default;
};

using FlowField = Raster<FlowVector>;

struct FlowParams {
  int levels = 3;
  int coarse_radius = 11;        // search radius at the coarsest level
  int fine_radius = 2;           // refinement radius at every finer level
  double data_truncation = 5.0;  // on the L1 descriptor distance
  double smoothness = 0.3;       // per pixel of flow difference, per axis
  double smoothness_truncation = 1.2;
  double displacement_weight = 0.002;
  int iterations = 60;           // message-passing sweeps per level (upper bound)

  void Validate() const {
    if (levels < 1) throw InputError("flow.levels must be >= 1");
    if (coarse_radius < 0 || fine_radius < 0) throw InputError("flow radii must be >= 0");
    if (data_truncation < 0 || smoothness < 0 || smoothness_truncation < 0 ||
        displacement_weight < 0) {
      throw InputError("flow weights must be non-negative");
    }
    if (iterations < 1) throw InputError("flow.iterations must be >= 1");
  }
};

struct Correspondence2D3D {
  Vec2 pixel;   // query image
  Vec3 world;   // model point
  int view = 0;
};

struct PixelPair {
  PixelCoord query;
  PixelCoord render;
  friend bool operator==(const PixelPair&, const PixelPair&) = default;
  friend auto operator<=>(const PixelPair&, const PixelPair&) = default;
};

////////////////////////////////////////////////////////////////////////////////
// Descriptors
////////////////////////////////////////////////////////////////////////////////

// Per-pixel SIFT-style descriptor of the gradient-magnitude raster: gradients
// of the magnitude image are binned into 8 orientations (linear interpolation
// between neighboring bins) and summed over a 4x4 grid of square cells
// centered at the pixel. Descriptors are L2-normalized, clamped at 0.2 and
// renormalized. Sums use a fixed evaluation order so the field is exactly
// shift-equivariant away from the borders.
inline DenseSiftField DenseSift(const GradientImage& gradient, int cell_size = 4,
                                double smoothing_sigma = 0.0) {
  if (cell_size < 1) throw InputError("cell size must be positive");
  if (smoothing_sigma < 0) throw InputError("smoothing sigma must be non-negative");
  const int w = gradient.width();
  const int h = gradient.height();
  DenseSiftField field;
  field.width = w;
  field.height = h;
  field.cell_size = cell_size;
  field.data.assign(static_cast<size_t>(w) * h * kSiftDims, 0.0f);
  field.valid.assign(static_cast<size_t>(w) * h, 0);
  if (w == 0 || h == 0) return field;

  const size_t npix = static_cast<size_t>(w) * h;
  std::vector<double> base(npix, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (gradient.valid(x, y)) base[static_cast<size_t>(y) * w + x] = gradient(x, y);
    }
  }
  if (smoothing_sigma > 0) {
    // Separable Gaussian, replicate padding.
    const int r = static_cast<int>(std::ceil(3.0 * smoothing_sigma));
    std::vector<double> kernel(2 * r + 1);
    double ksum = 0.0;
    for (int i = -r; i <= r; ++i) {
      kernel[i + r] = std::exp(-0.5 * i * i / (smoothing_sigma * smoothing_sigma));
      ksum += kernel[i + r];
    }
    for (double& k : kernel) k /= ksum;
    std::vector<double> tmp(npix, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) {
          s += kernel[i + r] * base[static_cast<size_t>(y) * w + std::clamp(x + i, 0, w - 1)];
        }
        tmp[static_cast<size_t>(y) * w + x] = s;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) {
          s += kernel[i + r] * tmp[static_cast<size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
        }
        base[static_cast<size_t>(y) * w + x] = s;
      }
    }
  }
  auto value = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return base[static_cast<size_t>(y) * w + x];
  };

  // Orientation planes.
  std::vector<double> planes(npix * kSiftBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = 0.5 * (value(x + 1, y) - value(x - 1, y));
      const double dy = 0.5 * (value(x, y + 1) - value(x, y - 1));
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double angle = std::atan2(dy, dx);
      if (angle < 0) angle += 2.0 * std::numbers::pi;
      const double pos = angle / (2.0 * std::numbers::pi) * kSiftBins;
      int lo = static_cast<int>(std::floor(pos));
      const double frac = pos - lo;
      lo %= kSiftBins;
      const int hi = (lo + 1) % kSiftBins;
      const size_t base = (static_cast<size_t>(y) * w + x) * kSiftBins;
      planes[base + lo] += mag * (1.0 - frac);
      planes[base + hi] += mag * frac;
    }
  }

  // Cell sums anchored at their top-left pixel, zero outside the raster.
  std::vector<double> horiz(npix * kSiftBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int b = 0; b < kSiftBins; ++b) {
        double s = 0.0;
        for (int i = 0; i < cell_size && x + i < w; ++i) {
          s += planes[(static_cast<size_t>(y) * w + x + i) * kSiftBins + b];
        }
        horiz[(static_cast<size_t>(y) * w + x) * kSiftBins + b] = s;
      }
    }
  }
  std::vector<double> cells(npix * kSiftBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int b = 0; b < kSiftBins; ++b) {
        double s = 0.0;
        for (int j = 0; j < cell_size && y + j < h; ++j) {
          s += horiz[(static_cast<size_t>(y + j) * w + x) * kSiftBins + b];
        }
        cells[(static_cast<size_t>(y) * w + x) * kSiftBins + b] = s;
      }
    }
  }

  const int half = kSiftCells / 2 * cell_size;
  std::array<double, kSiftDims> desc;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!gradient.valid(x, y)) continue;
      field.valid[static_cast<size_t>(y) * w + x] = 1;
      for (int cy = 0; cy < kSiftCells; ++cy) {
        for (int cx = 0; cx < kSiftCells; ++cx) {
          const int sx = x - half + cx * cell_size;
          const int sy = y - half + cy * cell_size;
          for (int b = 0; b < kSiftBins; ++b) {
            const int d = (cy * kSiftCells + cx) * kSiftBins + b;
            desc[d] = (sx >= 0 && sy >= 0 && sx < w && sy < h)
                          ? cells[(static_cast<size_t>(sy) * w + sx) * kSiftBins + b]
                          : 0.0;
          }
        }
      }
      double norm = 0.0;
      for (double v : desc) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 1e-12)) continue;
      double norm2 = 0.0;
      for (double& v : desc) {
        v = std::min(v / norm, 0.2);
        norm2 += v * v;
      }
      norm2 = std::sqrt(norm2);
      float* out = field.data.data() + (static_cast<size_t>(y) * w + x) * kSiftDims;
      for (int d = 0; d < kSiftDims; ++d) out[d] = static_cast<float>(desc[d] / norm2);
    }
  }
  return field;
}

////////////////////////////////////////////////////////////////////////////////
// Masks and pairs
////////////////////////////////////////////////////////////////////////////////

// Valid pixels whose magnitude exceeds `fraction` times the 99th percentile of
// the valid magnitudes.
inline Mask TexturedMask(const GradientImage& gradient, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InputError("texture fraction must lie in (0, 1)");
  }
  Mask mask(gradient.width(), gradient.height(), 0);
  std::vector<double> mags;
  mags.reserve(gradient.size());
  for (size_t i = 0; i < gradient.size(); ++i) {
    if (gradient.valid(i)) mags.push_back(gradient.values()[i]);
  }
  if (mags.empty()) return mask;
  const size_t k = std::min(mags.size() - 1,
                            static_cast<size_t>(std::ceil(0.99 * mags.size())) - 1);
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(k), mags.end());
  const double threshold = fraction * mags[k];
  for (int y = 0; y < gradient.height(); ++y) {
    for (int x = 0; x < gradient.width(); ++x) {
      if (gradient.valid(x, y) && gradient(x, y) > threshold) mask.Set(x, y, 1);
    }
  }
  return mask;
}

inline size_t MaskCount(const Mask& mask) {
  size_t n = 0;
  for (size_t i = 0; i < mask.size(); ++i) n += (mask.valid(i) && mask.values()[i]) ? 1 : 0;
  return n;
}

inline bool Masked(const Mask& mask, int x, int y) {
  return mask.InBounds(x, y) && mask.valid(x, y) && mask(x, y) != 0;
}

namespace internal {

inline void CollectOneWay(const FlowField& ab, const FlowField& ba, double tol,
                          bool swap, std::vector<PixelPair>& out) {
  const double tol2 = tol * tol;
  for (int y = 0; y < ab.height(); ++y) {
    for (int x = 0; x < ab.width(); ++x) {
      if (!ab.valid(x, y)) continue;
      const FlowVector f = ab(x, y);
      const int qx = x + f.u;
      const int qy = y + f.v;
      if (!ba.InBounds(qx, qy) || !ba.valid(qx, qy)) continue;
      const FlowVector b = ba(qx, qy);
      const double ex = qx + b.u - x;
      const double ey = qy + b.v - y;
      if (ex * ex + ey * ey > tol2) continue;
      if (swap) {
        out.push_back({{qx, qy}, {x, y}});
      } else {
        out.push_back({{x, y}, {qx, qy}});
      }
    }
  }
}

}  // namespace internal

// Pairs (query pixel p, render pixel q) linked by opposite flow vectors:
// q = p + forward(p) with |p - (q + backward(q))| <= tol, together with the
// mirrored condition checked from the render side. Including both directions
// makes the result independent of which field is called "forward".
// Sorted and free of duplicates.
inline std::vector<PixelPair> ConsistentPairs(const FlowField& forward,
                                              const FlowField& backward, double tol) {
  if (tol < 0) throw InputError("consistency tolerance must be non-negative");
  std::vector<PixelPair> pairs;
  internal::CollectOneWay(forward, backward, tol, false, pairs);
  internal::CollectOneWay(backward, forward, tol, true, pairs);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

// Backprojects the render-side pixel of each pair through the render's depth.
// Pairs landing on invalid render pixels are dropped.
inline std::vector<Correspondence2D3D> LiftTo3D(const std::vector<PixelPair>& pairs,
                                                const RenderOutput& render,
                                                const CameraIntrinsics& k,
                                                const CameraPose& pose, int view = 0) {
  std::vector<Correspondence2D3D> out;
  out.reserve(pairs.size());
  for (const PixelPair& pair : pairs) {
    const int x = pair.render.x;
    const int y = pair.render.y;
    if (!render.depth.InBounds(x, y) || !render.valid(x, y)) continue;
    Correspondence2D3D c;
    c.pixel = Vec2(pair.query.x, pair.query.y);
    c.world = BackprojectPixel(x, y, render.depth(x, y), k, pose);
    c.view = view;
    if (c.world.allFinite()) out.push_back(c);
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////////
// SIFT flow
////////////////////////////////////////////////////////////////////////////////

namespace internal {

// Descriptor image quantized to bytes for matching (1/255 resolution).
struct ByteLevel {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  const uint8_t* At(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * kSiftDims;
  }
};

inline ByteLevel Quantize(const std::vector<float>& data, int width, int height) {
  ByteLevel out{width, height, std::vector<uint8_t>(data.size())};
  for (size_t i = 0; i < data.size(); ++i) {
    out.data[i] = static_cast<uint8_t>(std::clamp(data[i], 0.0f, 1.0f) * 255.0f + 0.5f);
  }
  return out;
}

// Level l + 1 averages the 2x2 children of level l.
inline std::vector<ByteLevel> BuildDescriptorPyramid(const DenseSiftField& field, int levels) {
  std::vector<ByteLevel> out;
  out.push_back(Quantize(field.data, field.width, field.height));
  const std::vector<float>* prev = &field.data;
  std::vector<float> current;
  int pw = field.width;
  int ph = field.height;
  for (int l = 1; l < levels; ++l) {
    const int w = std::max(1, (pw + 1) / 2);
    const int h = std::max(1, (ph + 1) / 2);
    std::vector<float> next(static_cast<size_t>(w) * h * kSiftDims, 0.0f);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float* o = next.data() + (static_cast<size_t>(y) * w + x) * kSiftDims;
        int count = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int sx = 2 * x + dx;
            const int sy = 2 * y + dy;
            if (sx >= pw || sy >= ph) continue;
            const float* in = prev->data() + (static_cast<size_t>(sy) * pw + sx) * kSiftDims;
            for (int d = 0; d < kSiftDims; ++d) o[d] += in[d];
            ++count;
          }
        }
        const float inv = 1.0f / static_cast<float>(count);
        for (int d = 0; d < kSiftDims; ++d) o[d] *= inv;
      }
    }
    out.push_back(Quantize(next, w, h));
    current = std::move(next);
    prev = &current;
    pw = w;
    ph = h;
  }
  return out;
}

inline int SumAbsDiff(const uint8_t* a, const uint8_t* b) {
  int s = 0;
  for (int d = 0; d < kSiftDims; ++d) s += std::abs(int(a[d]) - int(b[d]));
  return s;
}

// One pyramid level of the dual-layer belief propagation. Nodes are the masked
// pixels; each carries a square window of candidate displacements centered on
// its own prior flow.
class LevelSolver {
 public:
  struct Node {
    int x;
    int y;
    int cu;  // window center
    int cv;
    std::array<int, 4> nbr;  // left, right, up, down; -1 if absent
  };

  LevelSolver(const ByteLevel& src, const ByteLevel& dst, std::vector<Node> nodes,
              int radius, const FlowParams& params)
      : src_(src), dst_(dst), nodes_(std::move(nodes)), radius_(radius),
        labels_(2 * radius + 1), params_(params) {}

  std::vector<FlowVector> Solve() {
    const size_t n = nodes_.size();
    const int L = labels_;
    data_.assign(n * L * L, 0.0f);
    ComputeDataCosts();
    msg_u_.assign(n * 4 * L, 0.0f);
    msg_v_.assign(n * 4 * L, 0.0f);
    inter_u_.assign(n * L, 0.0f);
    inter_v_.assign(n * L, 0.0f);

    std::vector<FlowVector> labels = Decode();
    int stable = 0;
    for (int it = 0; it < params_.iterations; ++it) {
      for (size_t i = 0; i < n; ++i) UpdateNode(i, /*forward=*/true);
      for (size_t i = n; i-- > 0;) UpdateNode(i, /*forward=*/false);
      std::vector<FlowVector> next = Decode();
      stable = (next == labels) ? stable + 1 : 0;
      labels = std::move(next);
      if (stable >= kStableSweeps) break;
    }
    return labels;
  }

 private:
  static constexpr int kStableSweeps = 4;
  static constexpr float kOutOfBounds = 1e4f;

  float* MsgU(size_t node, int dir) { return msg_u_.data() + (node * 4 + dir) * labels_; }
  float* MsgV(size_t node, int dir) { return msg_v_.data() + (node * 4 + dir) * labels_; }

  void ComputeDataCosts() {
    const int L = labels_;
    const float trunc = static_cast<float>(params_.data_truncation);
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const Node& nd = nodes_[i];
      const uint8_t* s = src_.At(nd.x, nd.y);
      float* d = data_.data() + i * L * L;
      for (int a = 0; a < L; ++a) {
        const int tx = nd.x + nd.cu - radius_ + a;
        for (int b = 0; b < L; ++b) {
          const int ty = nd.y + nd.cv - radius_ + b;
          if (tx < 0 || ty < 0 || tx >= dst_.width || ty >= dst_.height) {
            d[a * L + b] = kOutOfBounds;
            continue;
          }
          const float cost = static_cast<float>(SumAbsDiff(s, dst_.At(tx, ty))) / 255.0f;
          d[a * L + b] = std::min(cost, trunc);
        }
      }
    }
  }

  // Truncated-L1 distance transform of h (defined on the window starting at
  // absolute label `from`) evaluated on the window starting at `to`.
  void SendIntra(const float* h, int from, int to, float* out) const {
    const int L = labels_;
    const float alpha = static_cast<float>(params_.smoothness);
    const float trunc = static_cast<float>(params_.smoothness_truncation);
    float g[64];
    float hmin = h[0];
    for (int i = 0; i < L; ++i) {
      g[i] = h[i];
      hmin = std::min(hmin, h[i]);
    }
    for (int i = 1; i < L; ++i) g[i] = std::min(g[i], g[i - 1] + alpha);
    for (int i = L - 2; i >= 0; --i) g[i] = std::min(g[i], g[i + 1] + alpha);
    const float cap = hmin + trunc;
    float omin = std::numeric_limits<float>::infinity();
    for (int k = 0; k < L; ++k) {
      const int rel = to + k - from;
      const int c = std::clamp(rel, 0, L - 1);
      const float v = std::min(g[c] + alpha * static_cast<float>(std::abs(rel - c)), cap);
      out[k] = v;
      omin = std::min(omin, v);
    }
    for (int k = 0; k < L; ++k) out[k] -= omin;
  }

  void UpdateNode(size_t i, bool forward) {
    const Node& nd = nodes_[i];
    const int L = labels_;
    const float eta = static_cast<float>(params_.displacement_weight);
    float hu[64];
    float hv[64];
    // Layer beliefs from intra-layer messages and the displacement penalty.
    for (int a = 0; a < L; ++a) {
      hu[a] = eta * static_cast<float>(std::abs(nd.cu - radius_ + a));
      hv[a] = eta * static_cast<float>(std::abs(nd.cv - radius_ + a));
      for (int dir = 0; dir < 4; ++dir) {
        hu[a] += MsgU(i, dir)[a];
        hv[a] += MsgV(i, dir)[a];
      }
    }

    // Inter-layer messages through the data term.
    const float* d = data_.data() + i * L * L;
    float* iu = inter_u_.data() + i * L;
    float* iv = inter_v_.data() + i * L;
    for (int b = 0; b < L; ++b) iv[b] = std::numeric_limits<float>::infinity();
    for (int a = 0; a < L; ++a) {
      float best = std::numeric_limits<float>::infinity();
      for (int b = 0; b < L; ++b) {
        const float c = d[a * L + b];
        best = std::min(best, c + hv[b]);
        iv[b] = std::min(iv[b], c + hu[a]);
      }
      iu[a] = best;
    }
    Normalize(iu);
    Normalize(iv);

    // Outgoing intra-layer messages along the sweep direction.
    const std::array<int, 2> dirs = forward ? std::array<int, 2>{1, 3}
                                            : std::array<int, 2>{0, 2};
    float tu[64];
    float tv[64];
    for (int dir : dirs) {
      const int j = nd.nbr[dir];
      if (j < 0) continue;
      const int back = dir ^ 1;  // direction of i as seen from j
      for (int a = 0; a < L; ++a) {
        tu[a] = hu[a] + iu[a] - MsgU(i, dir)[a];
        tv[a] = hv[a] + iv[a] - MsgV(i, dir)[a];
      }
      const Node& nj = nodes_[j];
      SendIntra(tu, nd.cu - radius_, nj.cu - radius_, MsgU(j, back));
      SendIntra(tv, nd.cv - radius_, nj.cv - radius_, MsgV(j, back));
    }
  }

  void Normalize(float* m) const {
    float mn = m[0];
    for (int a = 1; a < labels_; ++a) mn = std::min(mn, m[a]);
    for (int a = 0; a < labels_; ++a) m[a] -= mn;
  }

  std::vector<FlowVector> Decode() {
    const int L = labels_;
    const float eta = static_cast<float>(params_.displacement_weight);
    std::vector<FlowVector> out(nodes_.size());
    float hu[64];
    float hv[64];
    for (size_t i = 0; i < nodes_.size(); ++i) {
      const Node& nd = nodes_[i];
      for (int a = 0; a < L; ++a) {
        hu[a] = eta * static_cast<float>(std::abs(nd.cu - radius_ + a));
        hv[a] = eta * static_cast<float>(std::abs(nd.cv - radius_ + a));
        for (int dir = 0; dir < 4; ++dir) {
          hu[a] += MsgU(i, dir)[a];
          hv[a] += MsgV(i, dir)[a];
        }
      }
      const float* d = data_.data() + i * L * L;
      float best = std::numeric_limits<float>::infinity();
      int ba = radius_;
      int bb = radius_;
      for (int a = 0; a < L; ++a) {
        for (int b = 0; b < L; ++b) {
          const float e = d[a * L + b] + hu[a] + hv[b];
          if (e < best) {
            best = e;
            ba = a;
            bb = b;
          }
        }
      }
      out[i] = {nd.cu - radius_ + ba, nd.cv - radius_ + bb};
    }
    return out;
  }

  const ByteLevel& src_;
  const ByteLevel& dst_;
  std::vector<Node> nodes_;
  int radius_;
  int labels_;
  FlowParams params_;
  std::vector<float> data_;
  std::vector<float> msg_u_;
  std::vector<float> msg_v_;
  std::vector<float> inter_u_;
  std::vector<float> inter_v_;
};

}  // namespace internal

// Descriptor pyramid reused across several flow computations.
class SiftPyramid {
 public:
  SiftPyramid(const DenseSiftField& field, int levels)
      : width_(field.width), height_(field.height),
        levels_(internal::BuildDescriptorPyramid(field, levels)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return static_cast<int>(levels_.size()); }
  const internal::ByteLevel& level(int l) const { return levels_[l]; }

 private:
  int width_;
  int height_;
  std::vector<internal::ByteLevel> levels_;
};

// Integer flow from `source` to `target` for every masked pixel, minimizing
//   sum_p min(|s(p) - t(p + w_p)|_1, data_truncation)
//   + displacement_weight * (|u_p| + |v_p|)
//   + sum_{p~q} min(smoothness |u_p - u_q|, smoothness_truncation)
//             + min(smoothness |v_p - v_q|, smoothness_truncation)
// over the 4-connected graph of masked pixels, coarse to fine. Unmasked
// pixels are invalid in the result.
inline FlowField SiftFlow(const SiftPyramid& source, const SiftPyramid& target,
                          const Mask& mask, const FlowParams& params) {
  params.Validate();
  if (source.width() != target.width() || source.height() != target.height() ||
      !mask.SameShape(source.width(), source.height())) {
    throw InputError("flow inputs must have equal dimensions");
  }
  const int levels = std::min({params.levels, source.levels(), target.levels()});
  if (params.coarse_radius > 31 || params.fine_radius > 31) {
    throw InputError("flow search radius limited to 31");
  }

  // Mask pyramid: a coarse pixel is active if any of its children is.
  std::vector<Mask> masks(1, Mask(mask.width(), mask.height(), 0));
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (Masked(mask, x, y)) masks[0].Set(x, y, 1);
    }
  }
  for (int l = 1; l < levels; ++l) {
    const internal::ByteLevel& lv = source.level(l);
    Mask m(lv.width, lv.height, 0);
    const Mask& prev = masks.back();
    for (int y = 0; y < prev.height(); ++y) {
      for (int x = 0; x < prev.width(); ++x) {
        if (Masked(prev, x, y)) m.Set(x / 2, y / 2, 1);
      }
    }
    masks.push_back(std::move(m));
  }

  FlowField result(mask.width(), mask.height());
  Raster<FlowVector> prior;  // flow of the next coarser level
  for (int l = levels - 1; l >= 0; --l) {
    const Mask& m = masks[l];
    const int w = m.width();
    const int h = m.height();
    Raster<int> index(w, h, -1);
    std::vector<internal::LevelSolver::Node> nodes;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!Masked(m, x, y)) continue;
        index(x, y) = static_cast<int>(nodes.size());
        internal::LevelSolver::Node nd{x, y, 0, 0, {-1, -1, -1, -1}};
        if (l < levels - 1 && prior.InBounds(x / 2, y / 2) && prior.valid(x / 2, y / 2)) {
          nd.cu = 2 * prior(x / 2, y / 2).u;
          nd.cv = 2 * prior(x / 2, y / 2).v;
        }
        nodes.push_back(nd);
      }
    }
    if (nodes.empty()) return result;
    for (auto& nd : nodes) {
      auto at = [&](int x, int y) { return index.InBounds(x, y) ? index(x, y) : -1; };
      nd.nbr = {at(nd.x - 1, nd.y), at(nd.x + 1, nd.y), at(nd.x, nd.y - 1),
                at(nd.x, nd.y + 1)};
    }
    const int radius = (l == levels - 1) ? params.coarse_radius : params.fine_radius;
    internal::LevelSolver solver(source.level(l), target.level(l), nodes, radius, params);
    const std::vector<FlowVector> flow = solver.Solve();

    Raster<FlowVector> current(w, h);
    for (size_t i = 0; i < nodes.size(); ++i) current.Set(nodes[i].x, nodes[i].y, flow[i]);
    prior = std::move(current);
  }

  for (int y = 0; y < result.height(); ++y) {
    for (int x = 0; x < result.width(); ++x) {
      if (!prior.valid(x, y)) continue;
      const FlowVector f = prior(x, y);
      if (result.InBounds(x + f.u, y + f.v)) result.Set(x, y, f);
    }
  }
  return result;
}

inline FlowField SiftFlow(const DenseSiftField& source, const DenseSiftField& target,
                          const Mask& mask, const FlowParams& params) {
  params.Validate();
  return SiftFlow(SiftPyramid(source, params.levels), SiftPyramid(target, params.levels),
                  mask, params);
}

}  // namespace asgreg
