#pragma once

// Synthetic evaluation harness: initial poses at prescribed initial errors,
// registration by the full pipeline or by ICP, and per-bucket statistics.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asgreg/icp.hpp"
#include "asgreg/pipeline.hpp"
#include "asgreg/scene.hpp"

namespace asgreg {

enum class EvalMode { kAsg, kIcp };

struct TestCase {
  int camera = 0;  // index into the scene cameras
  double target_delta = 0.0;
  CameraPose initial_pose;
  double initial_delta = 0.0;
};

struct CaseResult {
  TestCase test;
  bool success = false;
  std::optional<double> final_delta;
  double seconds = 0.0;
};

struct BucketStats {
  double target_delta = 0.0;
  int trials = 0;
  int successes = 0;
  double mean_initial = 0.0;
  double mean_final = 0.0;
  double std_final = 0.0;
  double min_final = 0.0;
  double max_final = 0.0;
};

struct EvalOptions {
  double icp_success_threshold = 20.0;  // px
  double icp_sample_spacing = 0.15;     // model units
  int icp_source_stride = 3;
  int icp_max_iterations = 50;
  double icp_convergence_eps = 1e-10;
  int delta_stride = 2;
  double bucket_tolerance = 0.02;  // relative
};

// Initial pose whose error to `gt` is close to `target_delta`: a random
// direction in pose space (translation offset plus rotation about a random
// axis) scaled by bisection.
inline TestCase MakeTestCase(const SyntheticScene& scene, int camera, double target_delta,
                             uint64_t seed, const EvalOptions& opts = {}) {
  const CameraPose& gt = scene.cameras.at(static_cast<size_t>(camera));
  const CameraIntrinsics& k = scene.intrinsics;
  TestCase tc{camera, target_delta, gt, 0.0};
  if (target_delta <= 0) return tc;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double diag = scene.mesh.BoundingBox().diagonal().norm();
  const Vec3 dt = Vec3(unit(rng), unit(rng), unit(rng)) * 0.02 * diag;
  Vec3 axis(unit(rng), unit(rng), unit(rng));
  if (axis.norm() < 1e-12) axis = Vec3::UnitX();
  const double angle = unit(rng) * 2.0 * std::numbers::pi / 180.0;

  const auto at = [&](double s) {
    return CameraPose::FromApproximateRotation(AxisAngle(axis, s * angle) * gt.rotation(),
                                               gt.translation() + s * dt);
  };
  const auto delta = [&](double s) {
    try {
      return PoseDelta(scene.mesh, k, at(s), k, gt, opts.delta_stride);
    } catch (const IncomparableError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 30 && delta(hi) < target_delta; ++i) hi *= 2.0;
  double s = hi;
  for (int i = 0; i < 50; ++i) {
    s = 0.5 * (lo + hi);
    const double d = delta(s);
    if (std::abs(d - target_delta) <= opts.bucket_tolerance * target_delta) break;
    if (d < target_delta) {
      lo = s;
    } else {
      hi = s;
    }
  }
  tc.initial_pose = at(s);
  tc.initial_delta = delta(s);
  return tc;
}

// `trials` test cases per bucket; cameras cycle over the ring.
inline std::vector<TestCase> MakeTestCases(const SyntheticScene& scene,
                                           const std::vector<double>& buckets, int trials,
                                           uint64_t seed, const EvalOptions& opts = {}) {
  std::vector<TestCase> cases;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(scene.cameras.size()) - 1);
  for (double b : buckets) {
    for (int t = 0; t < trials; ++t) {
      const int cam = pick(rng);
      cases.push_back(MakeTestCase(scene, cam, b, rng(), opts));
    }
  }
  return cases;
}

inline CaseResult RunAsgCase(const SyntheticScene& scene, const TestCase& tc,
                             const RegistrationConfig& config, uint64_t seed,
                             const EvalOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  RegistrationInput in;
  in.mesh = &scene.mesh;
  in.image = scene.images.at(static_cast<size_t>(tc.camera));
  in.depth = scene.depths.at(static_cast<size_t>(tc.camera));
  in.intrinsics = scene.intrinsics;
  in.initial_pose = tc.initial_pose;
  RegistrationConfig cfg = config;
  cfg.rng_seed = seed;
  const RegistrationReport rep = Register(in, cfg);
  CaseResult r{tc, rep.success, std::nullopt, 0.0};
  if (rep.final_pose) {
    const CameraPose& gt = scene.cameras[static_cast<size_t>(tc.camera)];
    try {
      r.final_delta = PoseDelta(scene.mesh, *rep.final_intrinsics, *rep.final_pose,
                                scene.intrinsics, gt, opts.delta_stride);
    } catch (const IncomparableError&) {
      r.final_delta = std::numeric_limits<double>::infinity();
    }
  }
  r.seconds = internal::Seconds(t0);
  return r;
}

// Point-to-point ICP from the backprojected query depth to samples of the
// mesh surface; success if the final error is below the ICP threshold.
inline CaseResult RunIcpCase(const SyntheticScene& scene, const TestCase& tc,
                             const PointCloudIndex& target, const EvalOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto source = BackprojectCameraFrame(scene.depths.at(static_cast<size_t>(tc.camera)),
                                             scene.intrinsics, opts.icp_source_stride);
  CaseResult r{tc, false, std::nullopt, 0.0};
  try {
    const IcpResult icp = IcpBaseline(source, target, tc.initial_pose, opts.icp_max_iterations,
                                      opts.icp_convergence_eps);
    const CameraPose& gt = scene.cameras[static_cast<size_t>(tc.camera)];
    r.final_delta = PoseDelta(scene.mesh, scene.intrinsics, icp.pose, scene.intrinsics, gt,
                              opts.delta_stride);
    r.success = *r.final_delta < opts.icp_success_threshold;
  } catch (const Error&) {
    r.success = false;
  }
  r.seconds = internal::Seconds(t0);
  return r;
}

inline std::vector<CaseResult> Evaluate(const SyntheticScene& scene,
                                        const std::vector<TestCase>& cases,
                                        const RegistrationConfig& config, EvalMode mode,
                                        uint64_t seed, const EvalOptions& opts = {}) {
  std::vector<CaseResult> results;
  std::optional<PointCloudIndex> index;
  if (mode == EvalMode::kIcp) {
    index.emplace(SampleMeshSurface(scene.mesh, opts.icp_sample_spacing, seed));
  }
  for (size_t i = 0; i < cases.size(); ++i) {
    if (mode == EvalMode::kAsg) {
      results.push_back(RunAsgCase(scene, cases[i], config, seed + i, opts));
    } else {
      results.push_back(RunIcpCase(scene, cases[i], *index, opts));
    }
  }
  return results;
}

// Statistics of the final error over the successful cases of each bucket.
inline std::vector<BucketStats> Summarize(const std::vector<CaseResult>& results) {
  std::vector<BucketStats> stats;
  for (const auto& r : results) {
    auto it = std::find_if(stats.begin(), stats.end(), [&](const BucketStats& s) {
      return s.target_delta == r.test.target_delta;
    });
    if (it == stats.end()) {
      stats.push_back({r.test.target_delta});
      it = stats.end() - 1;
    }
    it->trials++;
    it->mean_initial += r.test.initial_delta;
  }
  for (auto& s : stats) {
    s.mean_initial /= s.trials;
    std::vector<double> finals;
    for (const auto& r : results) {
      if (r.test.target_delta == s.target_delta && r.success && r.final_delta) {
        finals.push_back(*r.final_delta);
      }
    }
    s.successes = static_cast<int>(finals.size());
    if (finals.empty()) continue;
    double sum = 0.0;
    for (double f : finals) sum += f;
    s.mean_final = sum / finals.size();
    double var = 0.0;
    for (double f : finals) var += (f - s.mean_final) * (f - s.mean_final);
    s.std_final = finals.size() > 1 ? std::sqrt(var / (finals.size() - 1)) : 0.0;
    s.min_final = *std::min_element(finals.begin(), finals.end());
    s.max_final = *std::max_element(finals.begin(), finals.end());
  }
  return stats;
}

inline void WriteStatsCsv(const std::vector<BucketStats>& stats, std::ostream& out) {
  out << std::setprecision(6)
      << "bucket,trials,successes,mean_initial,mean_final,std_final,min_final,max_final\n";
  for (const auto& s : stats) {
    out << s.target_delta << ',' << s.trials << ',' << s.successes << ',' << s.mean_initial
        << ',' << s.mean_final << ',' << s.std_final << ',' << s.min_final << ','
        << s.max_final << '\n';
  }
}

inline void WriteCasesCsv(const std::vector<CaseResult>& results, std::ostream& out) {
  out << std::setprecision(6) << "bucket,camera,initial_delta,success,final_delta,seconds\n";
  for (const auto& r : results) {
    out << r.test.target_delta << ',' << r.test.camera << ',' << r.test.initial_delta << ','
        << (r.success ? 1 : 0) << ',';
    if (r.final_delta) out << *r.final_delta;
    out << ',' << r.seconds << '\n';
  }
}

}  // namespace asgreg
