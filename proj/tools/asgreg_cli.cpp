// Command-line front end: register, evaluate, render-asg, make-scene.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "asgreg/asgreg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

struct RegisterArgs {
  std::string mesh, image, depth, intrinsics, initial_pose, ground_truth, config;
  std::string out_report, out_overlay, out_correspondences, out_edges;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

int RunRegister(const RegisterArgs& a) {
  const asgreg::TriangleMesh mesh = asgreg::io::ReadMesh(a.mesh);
  asgreg::RegistrationInput in;
  in.mesh = &mesh;
  in.image = asgreg::io::ReadPgm(a.image);
  if (!a.depth.empty()) in.depth = asgreg::io::ReadDepthMap(a.depth);
  in.intrinsics = asgreg::io::ReadIntrinsics(a.intrinsics);
  in.initial_pose = asgreg::io::ReadPose(a.initial_pose);
  if (!a.ground_truth.empty()) in.ground_truth = asgreg::io::ReadPose(a.ground_truth);

  asgreg::RegistrationConfig cfg;
  if (!a.config.empty()) cfg = asgreg::LoadConfig(a.config);
  if (a.seed) cfg.rng_seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;

  const asgreg::RegistrationReport report = asgreg::Register(in, cfg);
  if (a.out_report.empty()) {
    asgreg::WriteReport(report, std::cout);
  } else {
    asgreg::WriteReport(report, a.out_report);
  }
  if (!a.out_overlay.empty()) {
    const asgreg::CameraPose& pose = report.final_pose ? *report.final_pose : in.initial_pose;
    const asgreg::CameraIntrinsics& k =
        report.final_intrinsics ? *report.final_intrinsics : in.intrinsics;
    asgreg::io::WritePgm(asgreg::RenderOverlay(in.image, mesh, k, pose), a.out_overlay);
  }
  if (!a.out_correspondences.empty()) {
    asgreg::WriteCorrespondencesCsv(report.correspondences, a.out_correspondences);
  }
  if (!a.out_edges.empty()) asgreg::WriteEdgesCsv(report.edges, a.out_edges);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << (report.success ? "registration accepted" : "registration rejected by verifier")
            << '\n';
  return report.success ? kExitSuccess : kExitRejected;
}

std::vector<double> ParseBuckets(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw asgreg::InputError("--buckets needs at least one value");
  return out;
}

struct EvaluateArgs {
  std::string scene = "house";
  std::string buckets = "30,55,80,100";
  int trials = 20;
  std::string mode = "asg";
  std::string intrinsics = "known";
  std::string out_csv, out_cases, config;
  uint64_t seed = 0;
};

int RunEvaluate(const EvaluateArgs& a) {
  if (a.mode != "asg" && a.mode != "icp") throw asgreg::InputError("--mode must be asg or icp");
  if (a.trials < 1) throw asgreg::InputError("--trials must be >= 1");
  asgreg::RegistrationConfig cfg;
  if (!a.config.empty()) cfg = asgreg::LoadConfig(a.config);
  if (a.intrinsics == "estimate") {
    cfg.intrinsics_mode = asgreg::IntrinsicsMode::kEstimate;
  } else if (a.intrinsics != "known") {
    throw asgreg::InputError("--intrinsics must be known or estimate");
  }
  const asgreg::SyntheticScene scene = asgreg::MakeSyntheticScene(a.scene, a.seed);
  const auto cases = asgreg::MakeTestCases(scene, ParseBuckets(a.buckets), a.trials, a.seed);
  const auto results = asgreg::Evaluate(
      scene, cases, cfg, a.mode == "asg" ? asgreg::EvalMode::kAsg : asgreg::EvalMode::kIcp,
      a.seed);
  const auto stats = asgreg::Summarize(results);
  if (a.out_csv.empty()) {
    asgreg::WriteStatsCsv(stats, std::cout);
  } else {
    std::ofstream out(a.out_csv);
    if (!out) throw asgreg::IoError("cannot open '" + a.out_csv + "' for writing");
    asgreg::WriteStatsCsv(stats, out);
  }
  if (!a.out_cases.empty()) {
    std::ofstream out(a.out_cases);
    if (!out) throw asgreg::IoError("cannot open '" + a.out_cases + "' for writing");
    asgreg::WriteCasesCsv(results, out);
  }
  return kExitSuccess;
}

int RunRenderAsg(const std::string& mesh_path, const std::string& pose_path,
                 const std::string& intrinsics_path, const std::string& out) {
  const asgreg::TriangleMesh mesh = asgreg::io::ReadMesh(mesh_path);
  const asgreg::CameraIntrinsics k = asgreg::io::ReadIntrinsics(intrinsics_path);
  const asgreg::CameraPose pose = asgreg::io::ReadPose(pose_path);
  const asgreg::RenderOutput render = asgreg::Render(mesh, k, pose);
  const asgreg::GradientImage asg = asgreg::AsgClosedForm(render.normals);
  if (out.size() > 4 && out.substr(out.size() - 4) == ".pgm") {
    asgreg::io::WriteNormalizedPgm(asg, out);
  } else {
    asgreg::io::WriteTextRaster(asgreg::io::ToTextRaster(asg), out);
  }
  return kExitSuccess;
}

int RunMakeScene(const std::string& name, uint64_t seed, const std::string& out_dir,
                 double depth_noise) {
  asgreg::SceneOptions opts;
  opts.depth_noise_sigma = depth_noise;
  const asgreg::SyntheticScene scene = asgreg::MakeSyntheticScene(name, seed, opts);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  asgreg::io::WritePly(scene.mesh, (dir / "mesh.ply").string());
  asgreg::io::WriteIntrinsics(scene.intrinsics, (dir / "intrinsics.txt").string());
  for (size_t i = 0; i < scene.cameras.size(); ++i) {
    const std::string stem = "view" + std::to_string(i);
    asgreg::io::WritePose(scene.cameras[i], (dir / (stem + "_pose.txt")).string());
    asgreg::io::WriteTextRaster(asgreg::io::ToTextRaster(scene.depths[i]),
                                (dir / (stem + "_depth.txt")).string());
    asgreg::io::WritePgm(scene.images[i], (dir / (stem + "_image.pgm")).string());
  }
  std::cout << "wrote " << scene.cameras.size() << " views of '" << name << "' ("
            << scene.mesh.NumFaces() << " faces) to " << out_dir << '\n';
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-to-mesh registration with average shading gradients"};
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* reg_cmd = app.add_subcommand("register", "Register a query image to a mesh");
  reg_cmd->add_option("--mesh", reg.mesh, "Triangle mesh (.ply or .obj)")->required();
  reg_cmd->add_option("--image", reg.image, "Query image (PGM)")->required();
  reg_cmd->add_option("--depth", reg.depth, "Query depth raster (text)");
  reg_cmd->add_option("--intrinsics", reg.intrinsics, "Intrinsics document")->required();
  reg_cmd->add_option("--initial-pose", reg.initial_pose, "Initial pose document")->required();
  reg_cmd->add_option("--ground-truth", reg.ground_truth, "Ground-truth pose for error reporting");
  reg_cmd->add_option("--config", reg.config, "Key-value configuration file");
  reg_cmd->add_option("--out-report", reg.out_report, "Report path (default: stdout)");
  reg_cmd->add_option("--out-overlay", reg.out_overlay, "Overlay image (PGM)");
  reg_cmd->add_option("--out-correspondences", reg.out_correspondences, "Correspondence CSV");
  reg_cmd->add_option("--out-edges", reg.out_edges, "Compatibility graph edge CSV");
  reg_cmd->add_option("--seed", reg.seed, "Random seed");
  reg_cmd->add_option("--threads", reg.threads, "Worker threads (0: all cores)");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Run the synthetic evaluation harness");
  ev_cmd->add_option("--scene", ev.scene, "Scene name (house, blocks, courtyard)");
  ev_cmd->add_option("--buckets", ev.buckets, "Comma-separated initial errors in pixels");
  ev_cmd->add_option("--trials", ev.trials, "Trials per bucket");
  ev_cmd->add_option("--mode", ev.mode, "asg or icp");
  ev_cmd->add_option("--intrinsics", ev.intrinsics, "known or estimate");
  ev_cmd->add_option("--config", ev.config, "Key-value configuration file");
  ev_cmd->add_option("--out-csv", ev.out_csv, "Per-bucket statistics CSV (default: stdout)");
  ev_cmd->add_option("--out-cases", ev.out_cases, "Per-case CSV");
  ev_cmd->add_option("--seed", ev.seed, "Random seed");

  std::string ra_mesh, ra_pose, ra_intrinsics, ra_out;
  auto* ra_cmd = app.add_subcommand("render-asg", "Render the ASG image of a mesh");
  ra_cmd->add_option("--mesh", ra_mesh, "Triangle mesh (.ply or .obj)")->required();
  ra_cmd->add_option("--pose", ra_pose, "Pose document")->required();
  ra_cmd->add_option("--intrinsics", ra_intrinsics, "Intrinsics document")->required();
  ra_cmd->add_option("--out", ra_out, "Output (.pgm or text raster)")->required();

  std::string ms_name = "house", ms_out;
  uint64_t ms_seed = 0;
  double ms_noise = 0.0;
  auto* ms_cmd = app.add_subcommand("make-scene", "Write a synthetic test scene");
  ms_cmd->add_option("--name", ms_name, "Scene name (house, blocks, courtyard)");
  ms_cmd->add_option("--seed", ms_seed, "Random seed");
  ms_cmd->add_option("--out-dir", ms_out, "Output directory")->required();
  ms_cmd->add_option("--depth-noise", ms_noise, "Depth noise sigma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitError;
  }

  try {
    if (*reg_cmd) return RunRegister(reg);
    if (*ev_cmd) return RunEvaluate(ev);
    if (*ra_cmd) return RunRenderAsg(ra_mesh, ra_pose, ra_intrinsics, ra_out);
    if (*ms_cmd) return RunMakeScene(ms_name, ms_seed, ms_out, ms_noise);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
