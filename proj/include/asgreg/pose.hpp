#pragma once

// Camera estimation from 2D-3D correspondences: normalized DLT for the full
// projection matrix, EPnP for known intrinsics, RQ decomposition, and the
// robust RANSAC loop that wraps both.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "asgreg/flow.hpp"
#include "asgreg/types.hpp"

namespace asgreg {

// Error assigned to a point projecting behind the camera.
inline constexpr double kBehindCameraPenalty = 1e6;

////////////////////////////////////////////////////////////////////////////////
// Reprojection
////////////////////////////////////////////////////////////////////////////////

// Pixel distance between the projection of `world` and `pixel`, or the
// behind-camera penalty.
inline double ReprojectionError(const Mat34& p, const Vec3& world, const Vec2& pixel) {
  const Eigen::Vector3d h = p.leftCols<3>() * world + p.col(3);
  if (!(h(2) > 1e-12 * p.norm())) return kBehindCameraPenalty;
  const Vec2 proj(h(0) / h(2), h(1) / h(2));
  return (proj - pixel).norm();
}

inline double ReprojectionRmse(const ProjectionMatrix& p,
                               std::span<const Correspondence2D3D> corrs) {
  if (corrs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : corrs) {
    const double e = ReprojectionError(p.matrix(), c.world, c.pixel);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(corrs.size()));
}

inline double ReprojectionRmse(const CameraIntrinsics& k, const CameraPose& pose,
                               std::span<const Correspondence2D3D> corrs) {
  return ReprojectionRmse(ComposeProjection(k, pose), corrs);
}

////////////////////////////////////////////////////////////////////////////////
// DLT
////////////////////////////////////////////////////////////////////////////////

struct DltSolution {
  ProjectionMatrix projection;
  // Smallest singular value of the normalized design matrix divided by the
  // largest; zero for noise-free data.
  double residual_ratio = 0.0;
};

// Normalized DLT (isotropic scaling: mean distance sqrt(2) for pixels and
// sqrt(3) for world points). Throws DegeneracyError for (near-)coplanar world
// points or a design matrix with more than one null direction.
inline DltSolution DltWithDiagnostics(std::span<const Correspondence2D3D> corrs) {
  const size_t n = corrs.size();
  if (n < 6) throw InputError("DLT needs at least 6 correspondences");

  Vec2 c2 = Vec2::Zero();
  Vec3 c3 = Vec3::Zero();
  for (const auto& c : corrs) {
    c2 += c.pixel;
    c3 += c.world;
  }
  c2 /= static_cast<double>(n);
  c3 /= static_cast<double>(n);
  double d2 = 0.0;
  double d3 = 0.0;
  Mat3 scatter = Mat3::Zero();
  for (const auto& c : corrs) {
    d2 += (c.pixel - c2).norm();
    d3 += (c.world - c3).norm();
  }
  d2 /= static_cast<double>(n);
  d3 /= static_cast<double>(n);
  if (!(d2 > 0.0) || !(d3 > 0.0)) throw DegeneracyError("DLT points have no spread");
  const double s2 = std::sqrt(2.0) / d2;
  const double s3 = std::sqrt(3.0) / d3;

  Eigen::MatrixXd a(2 * n, 12);
  for (size_t i = 0; i < n; ++i) {
    const Vec2 x = s2 * (corrs[i].pixel - c2);
    const Vec3 xw = s3 * (corrs[i].world - c3);
    scatter += xw * xw.transpose();
    Eigen::Vector4d X(xw.x(), xw.y(), xw.z(), 1.0);
    a.row(2 * i) << Eigen::RowVector4d::Zero(), -X.transpose(), x.y() * X.transpose();
    a.row(2 * i + 1) << X.transpose(), Eigen::RowVector4d::Zero(), -x.x() * X.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  if (eig.eigenvalues()(0) / eig.eigenvalues()(2) < 1e-8) {
    throw DegeneracyError("world points are coplanar; DLT is singular");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const int last = static_cast<int>(sv.size()) - 1;  // 11 when 2n >= 12
  if (sv(last - 1) / sv(0) < 1e-6) {
    throw DegeneracyError("DLT design matrix has more than one null direction");
  }
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Mat34 pn;
  pn << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();

  Mat3 t2 = Mat3::Identity();
  t2(0, 0) = t2(1, 1) = s2;
  t2.block<2, 1>(0, 2) = -s2 * c2;
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
  t3.topLeftCorner<3, 3>() *= s3;
  t3.block<3, 1>(0, 3) = -s3 * c3;
  Mat34 full = t2.inverse() * pn * t3;
  full /= full.norm();
  if (full.leftCols<3>().determinant() < 0) full = -full;

  if (ProjectionMatrix::LeftBlockConditioning(full) <= 1e-10) {
    throw DegeneracyError("DLT produced a rank-deficient camera");
  }
  return {ProjectionMatrix(full), sv(11) / sv(0)};
}

inline ProjectionMatrix Dlt(std::span<const Correspondence2D3D> corrs) {
  return DltWithDiagnostics(corrs).projection;
}

////////////////////////////////////////////////////////////////////////////////
// Decomposition
////////////////////////////////////////////////////////////////////////////////

// P ~ K [R | t] with K upper triangular, positive diagonal and K(2,2) = 1.
// The sign of P is fixed by det(left block) > 0, which puts points with
// positive homogeneous depth in front of the camera. Image dimensions are not
// encoded in P and are copied from the arguments.
inline std::pair<CameraIntrinsics, CameraPose> Decompose(const Mat34& p_in, int width = 1,
                                                         int height = 1) {
  if (!p_in.allFinite() || ProjectionMatrix::LeftBlockConditioning(p_in) <= 1e-10) {
    throw DecompositionError("left 3x3 block of the projection is not invertible");
  }
  Mat34 p = p_in / p_in.norm();
  if (p.leftCols<3>().determinant() < 0) p = -p;
  const Mat3 m = p.leftCols<3>();

  // RQ through QR of the row-reversed transpose.
  Mat3 flip = Mat3::Zero();
  flip(0, 2) = flip(1, 1) = flip(2, 0) = 1.0;
  Eigen::HouseholderQR<Mat3> qr((flip * m).transpose());
  const Mat3 q = qr.householderQ();
  const Mat3 u = qr.matrixQR().triangularView<Eigen::Upper>();
  Mat3 k = flip * u.transpose() * flip;
  Mat3 r = flip * q.transpose();
  const Mat3 d = k.diagonal().cwiseSign().asDiagonal();
  k = k * d;
  r = d * r;
  if (r.determinant() < 0) {
    throw DecompositionError("decomposition produced an improper rotation");
  }
  const Vec3 t = k.inverse() * p.col(3);
  const double s = k(2, 2);
  k /= s;
  CameraIntrinsics intr{k(0, 0), k(1, 1), k(0, 2), k(1, 2), k(0, 1), width, height};
  intr.Validate();
  return {intr, CameraPose::FromApproximateRotation(r, t)};
}

inline std::pair<CameraIntrinsics, CameraPose> Decompose(const ProjectionMatrix& p,
                                                         int width = 1, int height = 1) {
  return Decompose(p.matrix(), width, height);
}

////////////////////////////////////////////////////////////////////////////////
// EPnP
////////////////////////////////////////////////////////////////////////////////

namespace internal {

// Absolute orientation (no scale) mapping `world` onto `cam`.
inline CameraPose RigidFit(const std::vector<Vec3>& world, const std::vector<Vec3>& cam) {
  Eigen::Matrix3Xd src(3, world.size());
  Eigen::Matrix3Xd dst(3, cam.size());
  for (size_t i = 0; i < world.size(); ++i) {
    src.col(static_cast<long>(i)) = world[i];
    dst.col(static_cast<long>(i)) = cam[i];
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  return CameraPose::FromApproximateRotation(t.topLeftCorner<3, 3>(), t.block<3, 1>(0, 3));
}

class EpnpSolver {
 public:
  EpnpSolver(std::span<const Correspondence2D3D> corrs, const CameraIntrinsics& k)
      : corrs_(corrs), k_(k) {}

  CameraPose Solve() {
    const size_t n = corrs_.size();
    if (n < 4) throw InputError("EPnP needs at least 4 correspondences");

    Vec3 c0 = Vec3::Zero();
    for (const auto& c : corrs_) c0 += c.world;
    c0 /= static_cast<double>(n);
    Mat3 cov = Mat3::Zero();
    for (const auto& c : corrs_) cov += (c.world - c0) * (c.world - c0).transpose();
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 lambda = eig.eigenvalues();  // ascending
    if (!(lambda(2) > 1e-20)) throw InputError("EPnP points have no spatial spread");
    if (!(lambda(1) / lambda(2) > 1e-12)) throw InputError("EPnP points are collinear");
    planar_ = lambda(0) / lambda(2) < kPlanarRatio;
    nc_ = planar_ ? 3 : 4;

    // Control points: centroid plus principal directions scaled by std dev.
    ctrl_.assign(nc_, c0);
    std::vector<Vec3> axes;
    for (int j = 2; j >= (planar_ ? 1 : 0); --j) {
      axes.push_back(std::sqrt(lambda(j)) * eig.eigenvectors().col(j));
    }
    for (int j = 0; j < nc_ - 1; ++j) ctrl_[j + 1] = c0 + axes[j];

    // Barycentric coordinates.
    alphas_.resize(n, nc_);
    for (size_t i = 0; i < n; ++i) {
      const Vec3 d = corrs_[i].world - c0;
      double sum = 0.0;
      for (int j = 0; j < nc_ - 1; ++j) {
        const double a = axes[j].dot(d) / axes[j].squaredNorm();
        alphas_(static_cast<long>(i), j + 1) = a;
        sum += a;
      }
      alphas_(static_cast<long>(i), 0) = 1.0 - sum;
    }

    // Linear system in normalized image coordinates.
    const Mat3 kinv = k_.Matrix().inverse();
    Eigen::MatrixXd m(2 * n, 3 * nc_);
    for (size_t i = 0; i < n; ++i) {
      const Vec3 xn = kinv * corrs_[i].pixel.homogeneous();
      const double u = xn.x() / xn.z();
      const double v = xn.y() / xn.z();
      for (int j = 0; j < nc_; ++j) {
        const double a = alphas_(static_cast<long>(i), j);
        m.block<2, 3>(2 * static_cast<long>(i), 3 * j) << a, 0.0, -a * u, 0.0, a, -a * v;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::MatrixXd& vmat = svd.matrixV();
    const int cols = 3 * nc_;

    // Null-space candidates, smallest singular value first.
    std::vector<Eigen::VectorXd> kernel;
    for (int j = 0; j < std::min(nc_, 3); ++j) kernel.push_back(vmat.col(cols - 1 - j));

    std::optional<CameraPose> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int dim = 1; dim <= static_cast<int>(kernel.size()); ++dim) {
      const Eigen::VectorXd betas = EstimateBetas(kernel, dim);
      const Eigen::VectorXd refined = RefineBetas(kernel, betas);
      auto pose = PoseFromBetas(kernel, refined);
      if (!pose) continue;
      const double err = ReprojectionRmse(k_, *pose, corrs_);
      if (err < best_err) {
        best_err = err;
        best = pose;
      }
    }
    if (!best) throw DegeneracyError("EPnP found no valid pose");
    return *best;
  }

  bool planar() const { return planar_; }

 private:
  static constexpr double kPlanarRatio = 1e-10;

  std::vector<std::pair<int, int>> ControlPairs() const {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < nc_; ++a) {
      for (int b = a + 1; b < nc_; ++b) pairs.push_back({a, b});
    }
    return pairs;
  }

  static Vec3 ControlOf(const Eigen::VectorXd& v, int j) { return v.segment<3>(3 * j); }

  Eigen::VectorXd Combine(const std::vector<Eigen::VectorXd>& kernel,
                          const Eigen::VectorXd& betas) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3 * nc_);
    for (long j = 0; j < betas.size(); ++j) x += betas(j) * kernel[j];
    return x;
  }

  // Linearized initialization: distances between camera-frame control points
  // must equal their world-frame distances.
  Eigen::VectorXd EstimateBetas(const std::vector<Eigen::VectorXd>& kernel, int dim) const {
    const auto pairs = ControlPairs();
    Eigen::VectorXd rho(pairs.size());
    for (size_t r = 0; r < pairs.size(); ++r) {
      rho(static_cast<long>(r)) = (ctrl_[pairs[r].first] - ctrl_[pairs[r].second]).squaredNorm();
    }
    Eigen::VectorXd betas = Eigen::VectorXd::Zero(dim);
    if (dim == 1) {
      double num = 0.0;
      double den = 0.0;
      for (size_t r = 0; r < pairs.size(); ++r) {
        const double dc = (ControlOf(kernel[0], pairs[r].first) -
                           ControlOf(kernel[0], pairs[r].second)).norm();
        num += dc * std::sqrt(rho(static_cast<long>(r)));
        den += dc * dc;
      }
      betas(0) = den > 0 ? num / den : 0.0;
      return betas;
    }
    // Unknowns: products beta_a * beta_b for a <= b.
    std::vector<std::pair<int, int>> prods;
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) prods.push_back({a, b});
    }
    if (prods.size() > pairs.size()) {
      // Underdetermined (planar case with three kernel vectors): extend the
      // two-dimensional solution.
      Eigen::VectorXd b2 = EstimateBetas(kernel, dim - 1);
      betas.head(dim - 1) = b2;
      return betas;
    }
    Eigen::MatrixXd lmat(pairs.size(), prods.size());
    for (size_t r = 0; r < pairs.size(); ++r) {
      for (size_t c = 0; c < prods.size(); ++c) {
        const auto [a, b] = prods[c];
        const Vec3 da = ControlOf(kernel[a], pairs[r].first) - ControlOf(kernel[a], pairs[r].second);
        const Vec3 db = ControlOf(kernel[b], pairs[r].first) - ControlOf(kernel[b], pairs[r].second);
        lmat(static_cast<long>(r), static_cast<long>(c)) = (a == b ? 1.0 : 2.0) * da.dot(db);
      }
    }
    const Eigen::VectorXd x = lmat.colPivHouseholderQr().solve(rho);
    // Squares on the diagonal entries; signs from the products with beta_0.
    int col = 0;
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b, ++col) {
        if (a == b) betas(a) = std::sqrt(std::abs(x(col)));
      }
    }
    col = 0;
    for (int b = 0; b < dim; ++b, ++col) {
      if (b > 0 && x(col) < 0) betas(b) = -betas(b);
    }
    return betas;
  }

  // Gauss-Newton on the control-point distance constraints.
  Eigen::VectorXd RefineBetas(const std::vector<Eigen::VectorXd>& kernel,
                              Eigen::VectorXd betas) const {
    const auto pairs = ControlPairs();
    const int dim = static_cast<int>(betas.size());
    for (int it = 0; it < 10; ++it) {
      Eigen::MatrixXd jac(pairs.size(), dim);
      Eigen::VectorXd res(pairs.size());
      const Eigen::VectorXd x = Combine(kernel, betas);
      for (size_t r = 0; r < pairs.size(); ++r) {
        const Vec3 dx = ControlOf(x, pairs[r].first) - ControlOf(x, pairs[r].second);
        res(static_cast<long>(r)) =
            dx.squaredNorm() - (ctrl_[pairs[r].first] - ctrl_[pairs[r].second]).squaredNorm();
        for (int j = 0; j < dim; ++j) {
          const Vec3 dk = ControlOf(kernel[j], pairs[r].first) -
                          ControlOf(kernel[j], pairs[r].second);
          jac(static_cast<long>(r), j) = 2.0 * dx.dot(dk);
        }
      }
      const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-res);
      if (!step.allFinite()) break;
      betas += step;
      if (step.norm() < 1e-15 * (1.0 + betas.norm())) break;
    }
    return betas;
  }

  std::optional<CameraPose> PoseFromBetas(const std::vector<Eigen::VectorXd>& kernel,
                                          const Eigen::VectorXd& betas) const {
    const Eigen::VectorXd x = Combine(kernel, betas);
    std::vector<Vec3> cam(corrs_.size());
    std::vector<Vec3> world(corrs_.size());
    double mean_z = 0.0;
    for (size_t i = 0; i < corrs_.size(); ++i) {
      Vec3 p = Vec3::Zero();
      for (int j = 0; j < nc_; ++j) p += alphas_(static_cast<long>(i), j) * ControlOf(x, j);
      cam[i] = p;
      world[i] = corrs_[i].world;
      mean_z += p.z();
    }
    if (!(std::abs(mean_z) > 0.0) || !std::isfinite(mean_z)) return std::nullopt;
    if (mean_z < 0) {
      for (auto& p : cam) p = -p;
    }
    try {
      return RigidFit(world, cam);
    } catch (const InputError&) {
      return std::nullopt;
    }
  }

  std::span<const Correspondence2D3D> corrs_;
  CameraIntrinsics k_;
  bool planar_ = false;
  int nc_ = 4;
  std::vector<Vec3> ctrl_;
  Eigen::MatrixXd alphas_;
};

}  // namespace internal

// EPnP with known intrinsics. Coplanar point sets are handled with three
// control points. Throws InputError for fewer than 4 points or points without
// spatial spread.
inline CameraPose Epnp(std::span<const Correspondence2D3D> corrs, const CameraIntrinsics& k) {
  k.Validate();
  return internal::EpnpSolver(corrs, k).Solve();
}

////////////////////////////////////////////////////////////////////////////////
// RANSAC
////////////////////////////////////////////////////////////////////////////////

struct RansacParams {
  double inlier_threshold = 5.0;    // pixels
  double min_consensus_fraction = 0.65;
  int max_iterations = 500;
  int sample_size = 6;
  uint64_t rng_seed = 0;
  bool refit_on_inliers = true;

  void Validate(bool known_intrinsics) const {
    if (!(inlier_threshold > 0)) throw InputError("ransac threshold must be positive");
    if (min_consensus_fraction < 0 || min_consensus_fraction > 1) {
      throw InputError("ransac min consensus must lie in [0, 1]");
    }
    if (max_iterations < 1) throw InputError("ransac max iterations must be >= 1");
    if (sample_size < (known_intrinsics ? 4 : 6)) {
      throw InputError("ransac sample size too small for the estimator");
    }
  }
};

// Image dimensions are only used to label the decomposed intrinsics.
struct FullDlt {
  int width = 1;
  int height = 1;
};
struct KnownIntrinsics {
  CameraIntrinsics k;
};
using EstimationMode = std::variant<FullDlt, KnownIntrinsics>;

struct PoseHypothesis {
  ProjectionMatrix projection;
  std::optional<std::pair<CameraIntrinsics, CameraPose>> decomposed;
  std::vector<int> inliers;
  double consensus_fraction = 0.0;
  double inlier_rmse = 0.0;
  int iterations = 0;
  // Best model of the sampling loop before the final refit on all inliers.
  ProjectionMatrix sampled_projection;
  size_t sampled_inliers = 0;
  bool refit_applied = false;
};

namespace internal {

inline ProjectionMatrix FitModel(std::span<const Correspondence2D3D> corrs,
                                 const EstimationMode& mode) {
  if (const auto* known = std::get_if<KnownIntrinsics>(&mode)) {
    return ComposeProjection(known->k, Epnp(corrs, known->k));
  }
  return Dlt(corrs);
}

struct Score {
  std::vector<int> inliers;
  double rmse = 0.0;
};

inline Score ScoreModel(const ProjectionMatrix& p, std::span<const Correspondence2D3D> corrs,
                        double threshold) {
  Score s;
  double sum = 0.0;
  for (size_t i = 0; i < corrs.size(); ++i) {
    const double e = ReprojectionError(p.matrix(), corrs[i].world, corrs[i].pixel);
    if (e < threshold) {
      s.inliers.push_back(static_cast<int>(i));
      sum += e * e;
    }
  }
  s.rmse = s.inliers.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(s.inliers.size()));
  return s;
}

inline bool Better(const Score& a, const Score& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.rmse < b.rmse;
}

}  // namespace internal

// Samples `sample_size` correspondences per iteration, fits a model and keeps
// the one with the largest consensus set (ties: lower inlier RMSE). Stops as
// soon as the consensus fraction reaches `min_consensus_fraction`, otherwise
// after `max_iterations`. The winner is refit on its inliers and the refit is
// kept only if its consensus is at least as large.
inline PoseHypothesis RansacRefine(std::span<const Correspondence2D3D> corrs,
                                   const EstimationMode& mode, const RansacParams& params) {
  const bool known = std::holds_alternative<KnownIntrinsics>(mode);
  params.Validate(known);
  const size_t n = corrs.size();
  if (n < static_cast<size_t>(params.sample_size)) {
    throw InputError("not enough correspondences for a RANSAC sample");
  }

  std::mt19937_64 rng(params.rng_seed);
  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<Correspondence2D3D> sample(static_cast<size_t>(params.sample_size));

  std::optional<ProjectionMatrix> best_model;
  internal::Score best;
  int iterations = 0;
  while (iterations < params.max_iterations) {
    ++iterations;
    // Partial Fisher-Yates shuffle for a sample without replacement.
    for (int s = 0; s < params.sample_size; ++s) {
      std::uniform_int_distribution<size_t> pick(static_cast<size_t>(s), n - 1);
      std::swap(indices[static_cast<size_t>(s)], indices[pick(rng)]);
      sample[static_cast<size_t>(s)] = corrs[static_cast<size_t>(indices[static_cast<size_t>(s)])];
    }
    ProjectionMatrix model;
    try {
      model = internal::FitModel(sample, mode);
    } catch (const Error&) {
      continue;
    }
    internal::Score score = internal::ScoreModel(model, corrs, params.inlier_threshold);
    if (!best_model || internal::Better(score, best)) {
      best_model = model;
      best = std::move(score);
    }
    if (static_cast<double>(best.inliers.size()) >=
        params.min_consensus_fraction * static_cast<double>(n)) {
      break;
    }
  }
  if (!best_model) throw RefinementFailedError("every RANSAC sample was degenerate");

  PoseHypothesis hyp;
  hyp.iterations = iterations;
  hyp.sampled_projection = *best_model;
  hyp.sampled_inliers = best.inliers.size();
  ProjectionMatrix final_model = *best_model;

  if (params.refit_on_inliers && best.inliers.size() > static_cast<size_t>(params.sample_size)) {
    std::vector<Correspondence2D3D> inl;
    inl.reserve(best.inliers.size());
    for (int i : best.inliers) inl.push_back(corrs[static_cast<size_t>(i)]);
    try {
      const ProjectionMatrix refit = internal::FitModel(inl, mode);
      internal::Score s = internal::ScoreModel(refit, corrs, params.inlier_threshold);
      if (s.inliers.size() >= best.inliers.size()) {
        final_model = refit;
        best = std::move(s);
        hyp.refit_applied = true;
      }
    } catch (const Error&) {
    }
  }

  hyp.projection = final_model;
  hyp.inliers = best.inliers;
  hyp.inlier_rmse = best.rmse;
  hyp.consensus_fraction = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
  try {
    if (const auto* k = std::get_if<KnownIntrinsics>(&mode)) {
      hyp.decomposed = Decompose(final_model, k->k.width, k->k.height);
      hyp.decomposed->first = k->k;
    } else {
      const auto& dims = std::get<FullDlt>(mode);
      hyp.decomposed = Decompose(final_model, dims.width, dims.height);
    }
  } catch (const Error&) {
    hyp.decomposed.reset();
  }
  return hyp;
}

}  // namespace asgreg
