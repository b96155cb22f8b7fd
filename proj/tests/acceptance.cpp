// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: asgreg_acceptance [trials-per-bucket] [cases.csv]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "asgreg/asgreg.hpp"
#include "test_support.hpp"

namespace asgreg {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Outcome AsgIdentity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const NormalMap n = testing::SmoothRandomNormals(rng);
    AsgConfig cfg;
    cfg.mc_sample_count = 100000;
    cfg.rng_seed = static_cast<uint64_t>(i);
    worst = std::max(worst, testing::RelativeL2(AsgMonteCarlo(n, cfg, false), AsgClosedForm(n, cfg)));
  }
  const double secs = Seconds(t0);
  return {worst < 0.01 && secs < 30.0,
          Format("worst relative L2 %.4f%% over 10 maps, %.1f s", 100.0 * worst, secs)};
}

Outcome DltExactness() {
  std::mt19937_64 rng(202);
  int exact = 0;
  int degenerate = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose pose = testing::RandomPoseFacingOrigin(rng);
    const auto corrs = testing::ExactCorrespondences(rng, k, pose, 6 + i % 15);
    const double rms = ReprojectionRmse(Dlt(corrs), corrs);
    worst = std::max(worst, rms);
    exact += rms < 1e-8 ? 1 : 0;
  }
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose pose = testing::RandomPoseFacingOrigin(rng);
    const auto corrs = testing::ExactCorrespondences(rng, k, pose, 8 + i % 10, true);
    try {
      Dlt(corrs);
    } catch (const DegeneracyError&) {
      ++degenerate;
    }
  }
  return {exact == 100 && degenerate == 100,
          Format("%d/100 exact (worst RMS %.2e px), %d/100 coplanar rejected", exact, worst,
                 degenerate)};
}

Outcome EpnpExactness() {
  std::mt19937_64 rng(303);
  int ok = 0;
  double worst_rot = 0.0;
  double worst_t = 0.0;
  double worst_rms = 0.0;
  for (int i = 0; i < 100; ++i) {
    const bool planar = i % 2 == 1;
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose pose = testing::RandomPoseFacingOrigin(rng);
    const auto corrs = testing::ExactCorrespondences(rng, k, pose, planar ? 8 : 6, planar);
    const CameraPose est = Epnp(corrs, k);
    if (planar) {
      const double rms = ReprojectionRmse(k, est, corrs);
      worst_rms = std::max(worst_rms, rms);
      ok += rms < 1e-4 ? 1 : 0;
    } else {
      const double rot = RotationAngleBetween(est, pose);
      const double t = (est.translation() - pose.translation()).norm() / pose.translation().norm();
      worst_rot = std::max(worst_rot, rot);
      worst_t = std::max(worst_t, t);
      ok += (rot < 1e-6 && t < 1e-6) ? 1 : 0;
    }
  }
  return {ok == 100, Format("%d/100 exact (non-planar worst %.1e rad, %.1e rel; planar worst "
                            "RMS %.1e px)",
                            ok, worst_rot, worst_t, worst_rms)};
}

Outcome RansacContract() {
  std::mt19937_64 rng(404);
  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    const CameraIntrinsics k = testing::RandomIntrinsics(rng);
    const CameraPose pose = testing::RandomPoseFacingOrigin(rng);
    const auto corrs = testing::Contaminated(rng, k, pose, 0.5);
    RansacParams params;
    params.inlier_threshold = 3.0;
    params.rng_seed = static_cast<uint64_t>(i);
    const PoseHypothesis h = RansacRefine(corrs, FullDlt{k.width, k.height}, params);
    ok += (h.consensus_fraction >= 0.65 && h.iterations <= 500) ? 1 : 0;
  }

  const CameraIntrinsics k = testing::RandomIntrinsics(rng);
  const auto exact = testing::ExactCorrespondences(rng, k, testing::RandomPoseFacingOrigin(rng), 100);
  const PoseHypothesis first = RansacRefine(exact, FullDlt{k.width, k.height}, RansacParams{});
  auto noise = exact;
  std::uniform_real_distribution<double> ux(0.0, k.width - 1.0);
  std::uniform_real_distribution<double> uy(0.0, k.height - 1.0);
  for (auto& c : noise) c.pixel = Vec2(ux(rng), uy(rng));
  const PoseHypothesis capped = RansacRefine(noise, FullDlt{k.width, k.height}, RansacParams{});
  const bool semantics = first.iterations == 1 && first.consensus_fraction == 1.0 &&
                         capped.iterations == 500 && capped.consensus_fraction < 0.65;
  return {ok >= 95 && semantics,
          Format("%d/100 contaminated runs reach 0.65 within 500 iterations; exact data stops "
                 "after %d, pure noise after %d",
                 ok, first.iterations, capped.iterations)};
}

Outcome FlowShiftRecovery() {
  const FlowParams params;
  const int radius = params.coarse_radius;
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> shift(-radius, radius);
  int ok = 0;
  double worst = 1.0;
  for (int i = 0; i < 20; ++i) {
    const GradientImage source = testing::RandomTexture(rng, 128, 96);
    int du = shift(rng);
    int dv = shift(rng);
    if (i == 0) {
      du = radius;
      dv = -radius;
    }
    const GradientImage target = testing::Shifted(source, du, dv);
    const Mask mask = TexturedMask(source, 0.1);
    const FlowField f = SiftFlow(DenseSift(source), DenseSift(target), mask, params);
    const double frac =
        testing::FractionWithFlow(f, testing::InteriorMask(mask, du, dv, 10), {du, dv});
    worst = std::min(worst, frac);
    ok += frac >= 0.95 ? 1 : 0;
  }
  return {ok == 20, Format("%d/20 shifts within radius %d recovered; worst case %.1f%% exact", ok,
                           radius, 100.0 * worst)};
}

Outcome MutualErrorChecks() {
  std::vector<Vec3> grid;
  for (int y = -3; y <= 3; ++y) {
    for (int x = -4; x <= 4; ++x) grid.emplace_back(x, y, 1.0);
  }
  const ProjectionMatrix p;
  Mat3 t = Mat3::Identity();
  t(0, 2) = 3.0;
  t(1, 2) = 4.0;
  const double shift = MutualReprojectionError(p, ProjectionMatrix(t * p.matrix()), grid, grid);

  const SyntheticScene scene = MakeSyntheticScene("house", 0);
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<size_t> pick(0, scene.cameras.size() - 1);
  double worst = 0.0;
  int compared = 0;
  while (compared < 100) {
    const CameraPose a = PerturbPose(scene.cameras[pick(rng)], 0.4, 3.0, 1, rng())[0];
    const CameraPose b = PerturbPose(scene.cameras[pick(rng)], 0.4, 3.0, 1, rng())[0];
    try {
      const double ab = MutualReprojectionError(scene.mesh, scene.intrinsics, a, scene.intrinsics, b);
      const double ba = MutualReprojectionError(scene.mesh, scene.intrinsics, b, scene.intrinsics, a);
      worst = std::max(worst, std::abs(ab - ba));
      ++compared;
    } catch (const IncomparableError&) {
    }
  }
  return {shift == 5.0 && worst <= 1e-12,
          Format("(3,4) shift gives %.15g; worst asymmetry %.1e over 100 pairs", shift, worst)};
}

struct Sweep {
  std::vector<CaseResult> known;
  std::vector<CaseResult> estimate;
  std::vector<CaseResult> icp;
  double seconds = 0.0;
  double seconds_30 = 0.0;
};

Sweep RunSweep(const SyntheticScene& scene, int trials) {
  Sweep s;
  const std::vector<double> buckets = {30, 55, 80, 100};
  const auto cases = MakeTestCases(scene, buckets, trials, 2024);
  const RegistrationConfig known;
  RegistrationConfig estimate;
  estimate.intrinsics_mode = IntrinsicsMode::kEstimate;
  const auto t0 = std::chrono::steady_clock::now();
  for (size_t i = 0; i < cases.size(); ++i) {
    s.known.push_back(RunAsgCase(scene, cases[i], known, 2024 + i));
    const CaseResult& r = s.known.back();
    if (r.test.target_delta == 30) s.seconds_30 += r.seconds;
    std::cerr << "known   " << r.test.target_delta << " cam " << r.test.camera << " init "
              << r.test.initial_delta << " success " << r.success << " final "
              << r.final_delta.value_or(-1) << " (" << r.seconds << " s)\n";
  }
  for (size_t i = 0; i < static_cast<size_t>(trials); ++i) {
    s.estimate.push_back(RunAsgCase(scene, cases[i], estimate, 2024 + i));
    const CaseResult& r = s.estimate.back();
    std::cerr << "estimate 30 cam " << r.test.camera << " success " << r.success << " final "
              << r.final_delta.value_or(-1) << '\n';
  }
  s.seconds = Seconds(t0);
  const std::vector<TestCase> first(cases.begin(), cases.begin() + trials);
  s.icp = Evaluate(scene, first, known, EvalMode::kIcp, 2024);
  return s;
}

int Successes(const std::vector<CaseResult>& rs, double bucket) {
  int n = 0;
  for (const auto& r : rs) n += (r.test.target_delta == bucket && r.success) ? 1 : 0;
  return n;
}

Outcome EndToEnd(const Sweep& s, int trials) {
  int good = 0;
  int success = 0;
  double worst_ratio = 0.0;
  for (const auto& r : s.known) {
    if (r.test.target_delta != 30 || !r.success) continue;
    ++success;
    const double ratio = *r.final_delta / r.test.initial_delta;
    worst_ratio = std::max(worst_ratio, ratio);
    good += ratio < 0.1 ? 1 : 0;
  }
  const bool pass = trials >= 20 && success == good && 5 * good >= 4 * trials &&
                    s.seconds < 30 * 60.0;
  return {pass, Format("%d/%d trials at 30 px registered, %d with final < 10%% of initial "
                       "(worst ratio %.3f); 30 px trials %.0f s, full sweep %.0f s",
                       success, trials, good, worst_ratio, s.seconds_30, s.seconds)};
}

Outcome VerifierSafety(const Sweep& s) {
  int runs = 0;
  int violations = 0;
  for (const auto* set : {&s.known, &s.estimate}) {
    for (const auto& r : *set) {
      ++runs;
      if (r.success && !(*r.final_delta < r.test.initial_delta)) ++violations;
    }
  }
  return {runs >= 80 && violations == 0,
          Format("%d successful registrations with final >= initial over %d runs", violations,
                 runs)};
}

Outcome SuccessTrend(const Sweep& s, int trials) {
  const int at30 = Successes(s.known, 30);
  const int at100 = Successes(s.known, 100);
  const int est30 = Successes(s.estimate, 30);
  return {at100 < at30 && at30 >= est30 - 1,
          Format("known: %d/%d at 30 px, %d/%d at 55, %d/%d at 80, %d/%d at 100; estimate: %d/%d "
                 "at 30 px",
                 at30, trials, Successes(s.known, 55), trials, Successes(s.known, 80), trials,
                 at100, trials, est30, trials)};
}

Outcome IcpTrend(const Sweep& s) {
  double asg = 0.0;
  double icp = 0.0;
  int n = 0;
  int icp_ok = 0;
  for (size_t i = 0; i < s.icp.size(); ++i) {
    const CaseResult& a = s.known[i];
    const CaseResult& b = s.icp[i];
    icp_ok += b.success ? 1 : 0;
    if (!a.success || !b.final_delta) continue;
    asg += *a.final_delta;
    icp += *b.final_delta;
    ++n;
  }
  if (n == 0) return {false, "no case registered by the pipeline"};
  asg /= n;
  icp /= n;
  return {asg < icp, Format("mean final over %d cases at 30 px: pipeline %.2f px, ICP %.2f px "
                            "(ICP below 20 px on %d/%zu)",
                            n, asg, icp, icp_ok, s.icp.size())};
}

void WriteCases(const Sweep& s, const std::string& path) {
  std::ofstream out(path);
  out << "mode,bucket,camera,initial_delta,success,final_delta,seconds\n";
  const auto dump = [&](const char* mode, const std::vector<CaseResult>& rs) {
    for (const auto& r : rs) {
      out << mode << ',' << r.test.target_delta << ',' << r.test.camera << ','
          << r.test.initial_delta << ',' << r.success << ',';
      if (r.final_delta) out << *r.final_delta;
      out << ',' << r.seconds << '\n';
    }
  };
  dump("known", s.known);
  dump("estimate", s.estimate);
  dump("icp", s.icp);
}

}  // namespace
}  // namespace asgreg

int main(int argc, char** argv) {
  using namespace asgreg;
  const int trials = argc > 1 ? std::stoi(argv[1]) : 20;
  int failures = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << name << ": " << o.detail
              << std::endl;
    failures += o.pass ? 0 : 1;
  };
  const auto guarded = [](auto fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("threw: ") + e.what()};
    }
  };

  report(1, "ASG identity", guarded(AsgIdentity));
  report(2, "DLT exactness", guarded(DltExactness));
  report(3, "EPnP exactness", guarded(EpnpExactness));
  report(4, "RANSAC contract", guarded(RansacContract));
  report(5, "Flow shift recovery", guarded(FlowShiftRecovery));

  const SyntheticScene scene = MakeSyntheticScene("house", 0);
  const Sweep sweep = RunSweep(scene, trials);
  if (argc > 2) WriteCases(sweep, argv[2]);
  report(6, "End-to-end registration", guarded([&] { return EndToEnd(sweep, trials); }));
  report(7, "Verifier safety", guarded([&] { return VerifierSafety(sweep); }));
  report(8, "Success-rate trend", guarded([&] { return SuccessTrend(sweep, trials); }));
  report(9, "ICP comparison", guarded([&] { return IcpTrend(sweep); }));
  report(10, "Mutual reprojection error", guarded(MutualErrorChecks));
  return failures == 0 ? 0 : 1;
}
