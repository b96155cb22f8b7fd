#pragma once

// Full registration: coarse poses around the initial guess, rendered ASG
// views, dense flow against the query gradient image, per-view pose
// refinement and the compatibility-graph verification.

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "asgreg/asg.hpp"
#include "asgreg/flow.hpp"
#include "asgreg/io.hpp"
#include "asgreg/pose.hpp"
#include "asgreg/rasterizer.hpp"
#include "asgreg/verify.hpp"

namespace asgreg {

enum class IntrinsicsMode { kKnown, kEstimate };

// Source of the normals behind each rendered ASG view.
enum class RenderNormals { kMesh, kDepth };

struct RegistrationConfig {
  int coarse_pose_count = 15;
  std::optional<double> sigma_translation;  // default: 2 % of the bbox diagonal
  double sigma_rotation_deg = 2.0;
  IntrinsicsMode intrinsics_mode = IntrinsicsMode::kKnown;
  AsgConfig asg;
  RenderNormals render_normals = RenderNormals::kDepth;
  FlowParams flow{.levels = 4};  // coarse search reaches 11 * 2^3 = 88 px
  int sift_cell_size = 8;
  double sift_smoothing = 2.0;  // Gaussian sigma applied before descriptors
  double mask_fraction = 0.1;   // of the 99th-percentile gradient magnitude
  double consistency_tolerance = 1.0;
  // Correspondences whose rendered pixel lies within `depth_edge_radius` of a
  // relative depth jump above `depth_edge_jump` (per pixel) are dropped; 0
  // disables the filter.
  double depth_edge_jump = 0.02;
  int depth_edge_radius = 2;
  // Correspondences whose L1 descriptor distance reaches this cost are
  // dropped: flow there follows the smoothness term, not appearance.
  double max_match_cost = 3.0;
  RansacParams ransac;
  std::optional<double> inlier_threshold;  // default: 1 % of the longest image side
  VerifyParams verify;
  uint64_t rng_seed = 0;
  int threads = 0;  // 0: hardware concurrency

  void Validate() const {
    if (coarse_pose_count < 1) throw InputError("pipeline.coarse_poses must be >= 1");
    if (sigma_translation && *sigma_translation < 0) {
      throw InputError("pipeline.sigma_translation must be >= 0");
    }
    if (sigma_rotation_deg < 0) throw InputError("pipeline.sigma_rotation_deg must be >= 0");
    if (threads < 0) throw InputError("pipeline.threads must be >= 0");
    if (!(mask_fraction > 0 && mask_fraction < 1)) {
      throw InputError("flow.mask_fraction must lie in (0, 1)");
    }
    if (consistency_tolerance < 0) throw InputError("flow.consistency_tolerance must be >= 0");
    if (sift_cell_size < 1) throw InputError("flow.cell_size must be >= 1");
    if (sift_smoothing < 0) throw InputError("flow.descriptor_sigma must be >= 0");
    if (depth_edge_jump < 0 || depth_edge_radius < 0) {
      throw InputError("flow depth-edge filter settings must be >= 0");
    }
    if (max_match_cost <= 0) {
      throw InputError("flow.max_match_cost must be > 0");
    }
    if (verify.stride < 1) throw InputError("verify.stride must be >= 1");
    asg.Validate();
    flow.Validate();
  }
};

// Applies "section.key = value" entries; unknown keys are rejected.
inline void ApplyConfig(const io::KeyValueDocument& doc, RegistrationConfig& cfg) {
  using Setter = std::function<void(const std::string&)>;
  const auto whole = [](const std::string& v, size_t used) {
    if (used != v.size()) throw std::invalid_argument(v);
  };
  const auto num = [&](const std::string& v) {
    size_t used = 0;
    const double d = std::stod(v, &used);
    whole(v, used);
    return d;
  };
  const auto integer = [&](const std::string& v) {
    size_t used = 0;
    const int i = std::stoi(v, &used);
    whole(v, used);
    return i;
  };
  const auto boolean = [](const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw InputError("expected a boolean, got '" + v + "'");
  };
  const std::map<std::string, Setter> setters{
      {"asg.mc_samples", [&](auto& v) { cfg.asg.mc_sample_count = integer(v); }},
      {"asg.seed", [&](auto& v) { cfg.asg.rng_seed = std::stoull(v); }},
      {"asg.render_normals",
       [&](auto& v) {
         if (v == "mesh") {
           cfg.render_normals = RenderNormals::kMesh;
         } else if (v == "depth") {
           cfg.render_normals = RenderNormals::kDepth;
         } else {
           throw InputError("asg.render_normals must be 'mesh' or 'depth'");
         }
       }},
      {"flow.levels", [&](auto& v) { cfg.flow.levels = integer(v); }},
      {"flow.coarse_radius", [&](auto& v) { cfg.flow.coarse_radius = integer(v); }},
      {"flow.fine_radius", [&](auto& v) { cfg.flow.fine_radius = integer(v); }},
      {"flow.data_truncation", [&](auto& v) { cfg.flow.data_truncation = num(v); }},
      {"flow.smoothness", [&](auto& v) { cfg.flow.smoothness = num(v); }},
      {"flow.smoothness_truncation", [&](auto& v) { cfg.flow.smoothness_truncation = num(v); }},
      {"flow.displacement_weight", [&](auto& v) { cfg.flow.displacement_weight = num(v); }},
      {"flow.iterations", [&](auto& v) { cfg.flow.iterations = integer(v); }},
      {"flow.cell_size", [&](auto& v) { cfg.sift_cell_size = integer(v); }},
      {"flow.descriptor_sigma", [&](auto& v) { cfg.sift_smoothing = num(v); }},
      {"flow.mask_fraction", [&](auto& v) { cfg.mask_fraction = num(v); }},
      {"flow.consistency_tolerance", [&](auto& v) { cfg.consistency_tolerance = num(v); }},
      {"flow.depth_edge_jump", [&](auto& v) { cfg.depth_edge_jump = num(v); }},
      {"flow.depth_edge_radius", [&](auto& v) { cfg.depth_edge_radius = integer(v); }},
      {"flow.max_match_cost", [&](auto& v) { cfg.max_match_cost = num(v); }},
      {"ransac.threshold", [&](auto& v) { cfg.inlier_threshold = num(v); }},
      {"ransac.min_consensus", [&](auto& v) { cfg.ransac.min_consensus_fraction = num(v); }},
      {"ransac.max_iterations", [&](auto& v) { cfg.ransac.max_iterations = integer(v); }},
      {"ransac.sample_size", [&](auto& v) { cfg.ransac.sample_size = integer(v); }},
      {"ransac.refit", [&](auto& v) { cfg.ransac.refit_on_inliers = boolean(v); }},
      {"verify.stride", [&](auto& v) { cfg.verify.stride = integer(v); }},
      {"verify.threshold_fraction", [&](auto& v) { cfg.verify.threshold_fraction = num(v); }},
      {"pipeline.coarse_poses", [&](auto& v) { cfg.coarse_pose_count = integer(v); }},
      {"pipeline.sigma_translation", [&](auto& v) { cfg.sigma_translation = num(v); }},
      {"pipeline.sigma_rotation_deg", [&](auto& v) { cfg.sigma_rotation_deg = num(v); }},
      {"pipeline.intrinsics",
       [&](auto& v) {
         if (v == "known") {
           cfg.intrinsics_mode = IntrinsicsMode::kKnown;
         } else if (v == "estimate") {
           cfg.intrinsics_mode = IntrinsicsMode::kEstimate;
         } else {
           throw InputError("pipeline.intrinsics must be 'known' or 'estimate'");
         }
       }},
      {"pipeline.seed", [&](auto& v) { cfg.rng_seed = std::stoull(v); }},
      {"pipeline.threads", [&](auto& v) { cfg.threads = integer(v); }},
  };
  for (const auto& key : doc.keys()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("unknown config key '" + key + "'");
    try {
      it->second(doc.Get(key));
    } catch (const std::invalid_argument&) {
      throw InputError("config key '" + key + "' has a malformed value");
    } catch (const std::out_of_range&) {
      throw InputError("config key '" + key + "' is out of range");
    }
  }
  cfg.Validate();
}

inline RegistrationConfig LoadConfig(const std::string& path) {
  RegistrationConfig cfg;
  ApplyConfig(io::KeyValueDocument::Load(path), cfg);
  return cfg;
}

// Rotation by `angle_rad` about the unit `axis`.
inline Mat3 AxisAngle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

// `count` coarse poses: translation plus isotropic Gaussian noise (sigma_t),
// rotation left-composed with a rotation of N(0, sigma_r) degrees about a
// uniformly distributed axis.
inline std::vector<CameraPose> PerturbPose(const CameraPose& initial, double sigma_t,
                                           double sigma_r_deg, int count, uint64_t seed) {
  if (sigma_t < 0 || sigma_r_deg < 0) throw InputError("perturbation sigmas must be >= 0");
  if (count < 0) throw InputError("coarse pose count must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Vec3 dt(unit(rng), unit(rng), unit(rng));
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    const double angle = unit(rng) * sigma_r_deg * std::numbers::pi / 180.0;
    if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
    const Mat3 r = AxisAngle(axis, angle) * initial.rotation();
    poses.push_back(CameraPose::FromApproximateRotation(r, initial.translation() + sigma_t * dt));
  }
  return poses;
}

// Pixels within `radius` (Chebyshev) of an invalid pixel or of a neighbor
// whose depth differs by more than `relative_jump` times the depth per pixel
// of distance.
inline Mask DepthEdgeMask(const DepthMap& depth, double relative_jump, int radius) {
  Mask edges(depth.width(), depth.height(), 0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double d = depth(x, y);
      bool edge = false;
      for (int dy = -radius; dy <= radius && !edge; ++dy) {
        for (int dx = -radius; dx <= radius && !edge; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if (!depth.InBounds(xx, yy) || !depth.valid(xx, yy)) {
            edge = true;
          } else {
            const int dist = std::max(std::abs(dx), std::abs(dy));
            edge = std::abs(depth(xx, yy) - d) > relative_jump * d * dist;
          }
        }
      }
      if (edge) edges.Set(x, y, 1);
    }
  }
  return edges;
}

// Rendered gradient image of one coarse view.
inline GradientImage RenderedGradient(const RenderOutput& render, const CameraIntrinsics& k,
                                      const RegistrationConfig& config) {
  if (config.render_normals == RenderNormals::kMesh) {
    return AsgClosedForm(render.normals, config.asg);
  }
  return AsgClosedForm(NormalsFromDepth(render.depth, k), config.asg);
}

struct StageTimings {
  double render = 0.0;
  double asg = 0.0;
  double descriptors = 0.0;
  double flow = 0.0;
  double refine = 0.0;
  double verify = 0.0;
  double total = 0.0;
};

struct HypothesisRecord {
  int view = 0;
  CameraPose coarse_pose;
  std::string status = "ok";  // or the reason the view was dropped
  size_t correspondences = 0;
  std::optional<PoseHypothesis> hypothesis;
  int graph_node = -1;  // index in the compatibility graph
};

struct RegistrationReport {
  bool success = false;
  std::optional<CameraPose> final_pose;
  std::optional<CameraIntrinsics> final_intrinsics;
  int selected_view = -1;
  std::vector<HypothesisRecord> hypotheses;
  std::vector<GraphEdge> edges;      // graph edges in view indices
  std::vector<int> winning_component;  // view indices
  double graph_threshold = 0.0;
  StageTimings timings;
  std::optional<double> initial_delta;
  std::optional<double> final_delta;
  std::vector<std::string> warnings;
  std::vector<Correspondence2D3D> correspondences;  // all views, for export
};

struct RegistrationInput {
  const TriangleMesh* mesh = nullptr;
  IntensityImage image;
  std::optional<DepthMap> depth;
  CameraIntrinsics intrinsics;  // known, or the initial guess in estimate mode
  CameraPose initial_pose;
  std::optional<CameraPose> ground_truth;
};

namespace internal {

inline double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written to
// per-index slots by the caller.
inline void ParallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ViewResult {
  HypothesisRecord record;
  std::vector<Correspondence2D3D> correspondences;
  StageTimings timings;
};

}  // namespace internal

// Mutual reprojection error between a pose and the ground truth, both seen
// through the given intrinsics.
inline double PoseDelta(const TriangleMesh& mesh, const CameraIntrinsics& k_est,
                        const CameraPose& est, const CameraIntrinsics& k_gt,
                        const CameraPose& gt, int stride = 2) {
  return MutualReprojectionError(mesh, k_est, est, k_gt, gt, stride);
}

inline RegistrationReport Register(const RegistrationInput& input,
                                   const RegistrationConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  config.Validate();
  if (!input.mesh || input.mesh->empty()) throw InputError("registration needs a mesh");
  const TriangleMesh& mesh = *input.mesh;
  const CameraIntrinsics& k = input.intrinsics;
  k.Validate();
  if (!input.image.SameShape(k.width, k.height)) {
    throw InputError("query image size differs from the intrinsics image size");
  }

  RegistrationReport report;
  if (!input.depth) {
    report.warnings.push_back("no query depth; using intensity gradients");
  }
  const GradientImage query = QueryGradient(input.image, input.depth, k, config.asg);
  const DenseSiftField query_field = DenseSift(query, config.sift_cell_size, config.sift_smoothing);
  const SiftPyramid query_sift(query_field, config.flow.levels);
  const Mask query_mask = TexturedMask(query, config.mask_fraction);

  const double diag = mesh.BoundingBox().diagonal().norm();
  const double sigma_t = config.sigma_translation.value_or(0.02 * diag);
  const std::vector<CameraPose> coarse = PerturbPose(
      input.initial_pose, sigma_t, config.sigma_rotation_deg, config.coarse_pose_count,
      config.rng_seed);

  RansacParams ransac = config.ransac;
  ransac.inlier_threshold = config.inlier_threshold.value_or(0.01 * k.LongestDimension());
  const bool known = config.intrinsics_mode == IntrinsicsMode::kKnown;
  const EstimationMode mode =
      known ? EstimationMode(KnownIntrinsics{k}) : EstimationMode(FullDlt{k.width, k.height});

  std::vector<internal::ViewResult> views(coarse.size());
  internal::ParallelFor(static_cast<int>(coarse.size()), config.threads, [&](int v) {
    internal::ViewResult& out = views[static_cast<size_t>(v)];
    out.record.view = v;
    out.record.coarse_pose = coarse[static_cast<size_t>(v)];
    try {
      auto t0 = std::chrono::steady_clock::now();
      const RenderOutput render = Render(mesh, k, out.record.coarse_pose);
      out.timings.render = internal::Seconds(t0);

      t0 = std::chrono::steady_clock::now();
      const GradientImage rendered = RenderedGradient(render, k, config);
      out.timings.asg = internal::Seconds(t0);

      t0 = std::chrono::steady_clock::now();
      const DenseSiftField render_field =
          DenseSift(rendered, config.sift_cell_size, config.sift_smoothing);
      const SiftPyramid render_sift(render_field, config.flow.levels);
      const Mask render_mask = TexturedMask(rendered, config.mask_fraction);
      out.timings.descriptors = internal::Seconds(t0);

      t0 = std::chrono::steady_clock::now();
      const FlowField forward = SiftFlow(query_sift, render_sift, query_mask, config.flow);
      const FlowField backward = SiftFlow(render_sift, query_sift, render_mask, config.flow);
      auto pairs = ConsistentPairs(forward, backward, config.consistency_tolerance);
      if (config.depth_edge_jump > 0) {
        const Mask edges =
            DepthEdgeMask(render.depth, config.depth_edge_jump, config.depth_edge_radius);
        std::erase_if(pairs, [&](const PixelPair& p) {
          return Masked(edges, p.render.x, p.render.y);
        });
      }
      std::erase_if(pairs, [&](const PixelPair& p) {
        return DescriptorDistance(query_field, p.query, render_field, p.render) >= config.max_match_cost;
      });
      out.correspondences = LiftTo3D(pairs, render, k, out.record.coarse_pose, v);
      out.timings.flow = internal::Seconds(t0);
      out.record.correspondences = out.correspondences.size();

      t0 = std::chrono::steady_clock::now();
      RansacParams view_ransac = ransac;
      view_ransac.rng_seed = config.rng_seed * 1000003ULL + static_cast<uint64_t>(v);
      out.record.hypothesis = RansacRefine(out.correspondences, mode, view_ransac);
      out.timings.refine = internal::Seconds(t0);
    } catch (const InputError& e) {
      out.record.status = std::string("input: ") + e.what();
    } catch (const Error& e) {
      out.record.status = e.what();
    }
  });

  std::vector<PoseHypothesis> nodes;
  std::vector<int> node_view;
  for (auto& v : views) {
    report.timings.render += v.timings.render;
    report.timings.asg += v.timings.asg;
    report.timings.descriptors += v.timings.descriptors;
    report.timings.flow += v.timings.flow;
    report.timings.refine += v.timings.refine;
    if (v.record.hypothesis) {
      v.record.graph_node = static_cast<int>(nodes.size());
      nodes.push_back(*v.record.hypothesis);
      node_view.push_back(v.record.view);
    }
    report.correspondences.insert(report.correspondences.end(), v.correspondences.begin(),
                                  v.correspondences.end());
    report.hypotheses.push_back(std::move(v.record));
  }

  const auto t_verify = std::chrono::steady_clock::now();
  report.graph_threshold = config.verify.threshold_fraction * k.LongestDimension();
  if (!nodes.empty()) {
    const CompatibilityGraph graph = BuildGraph(nodes, mesh, k.width, k.height, config.verify);
    for (const auto& e : graph.edges) {
      report.edges.push_back({node_view[static_cast<size_t>(e.i)],
                              node_view[static_cast<size_t>(e.j)], e.delta});
    }
    const Selection sel = SelectPose(graph);
    for (int n : sel.component) report.winning_component.push_back(node_view[static_cast<size_t>(n)]);
    if (sel.success) {
      const PoseHypothesis& h = graph.nodes[static_cast<size_t>(sel.selected)];
      const auto cam = HypothesisCamera(h, k.width, k.height);
      if (cam) {
        report.success = true;
        report.selected_view = node_view[static_cast<size_t>(sel.selected)];
        report.final_pose = cam->second;
        report.final_intrinsics = known ? k : cam->first;
      } else {
        report.warnings.push_back("selected hypothesis could not be decomposed");
      }
    }
  }
  report.timings.verify = internal::Seconds(t_verify);

  if (input.ground_truth) {
    try {
      report.initial_delta =
          PoseDelta(mesh, k, input.initial_pose, k, *input.ground_truth, config.verify.stride);
      if (report.final_pose) {
        report.final_delta = PoseDelta(mesh, *report.final_intrinsics, *report.final_pose, k,
                                       *input.ground_truth, config.verify.stride);
      }
    } catch (const IncomparableError& e) {
      report.warnings.push_back(std::string("ground-truth comparison failed: ") + e.what());
    }
  }
  report.timings.total = internal::Seconds(t_start);
  return report;
}

////////////////////////////////////////////////////////////////////////////////
// Output
////////////////////////////////////////////////////////////////////////////////

inline void WriteReport(const RegistrationReport& r, std::ostream& out) {
  out << std::setprecision(10);
  out << "success = " << (r.success ? 1 : 0) << '\n';
  out << "selected_view = " << r.selected_view << '\n';
  if (r.final_pose) {
    io::KeyValueDocument doc;
    io::PutPose(doc, *r.final_pose);
    if (r.final_intrinsics) io::PutIntrinsics(doc, *r.final_intrinsics);
    for (const auto& key : doc.keys()) out << "final." << key << " = " << doc.Get(key) << '\n';
  }
  if (r.initial_delta) out << "initial_delta = " << *r.initial_delta << '\n';
  if (r.final_delta) out << "final_delta = " << *r.final_delta << '\n';
  out << "graph_threshold = " << r.graph_threshold << '\n';
  out << "winning_component =";
  for (int v : r.winning_component) out << ' ' << v;
  out << '\n';
  out << "time.render = " << r.timings.render << '\n'
      << "time.asg = " << r.timings.asg << '\n'
      << "time.descriptors = " << r.timings.descriptors << '\n'
      << "time.flow = " << r.timings.flow << '\n'
      << "time.refine = " << r.timings.refine << '\n'
      << "time.verify = " << r.timings.verify << '\n'
      << "time.total = " << r.timings.total << '\n';
  for (size_t i = 0; i < r.warnings.size(); ++i) {
    out << "warning." << i << " = " << r.warnings[i] << '\n';
  }

  out << "\n[hypotheses]\n"
         "view,status,correspondences,consensus_fraction,inlier_rmse,iterations,"
         "coarse_rotation,coarse_translation,refined_rotation,refined_translation\n";
  const auto pose_cols = [&](const std::optional<CameraPose>& p) {
    if (!p) return std::string(",");
    std::ostringstream ss;
    ss << std::setprecision(10);
    for (int i = 0; i < 9; ++i) ss << (i ? " " : "") << p->rotation()(i / 3, i % 3);
    ss << ',';
    for (int i = 0; i < 3; ++i) ss << (i ? " " : "") << p->translation()(i);
    return ss.str();
  };
  for (const auto& h : r.hypotheses) {
    std::string status = h.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << h.view << ',' << status << ',' << h.correspondences << ',';
    std::optional<CameraPose> refined;
    if (h.hypothesis) {
      out << h.hypothesis->consensus_fraction << ',' << h.hypothesis->inlier_rmse << ','
          << h.hypothesis->iterations << ',';
      if (h.hypothesis->decomposed) refined = h.hypothesis->decomposed->second;
    } else {
      out << ",,,";
    }
    out << pose_cols(h.coarse_pose) << ',' << pose_cols(refined) << '\n';
  }
  out << "\n[edges]\ni,j,delta\n";
  for (const auto& e : r.edges) out << e.i << ',' << e.j << ',' << e.delta << '\n';
}

inline void WriteReport(const RegistrationReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  WriteReport(r, out);
}

inline void WriteCorrespondencesCsv(const std::vector<Correspondence2D3D>& corrs,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(10) << "x,y,X,Y,Z,view\n";
  for (const auto& c : corrs) {
    out << c.pixel.x() << ',' << c.pixel.y() << ',' << c.world.x() << ',' << c.world.y() << ','
        << c.world.z() << ',' << c.view << '\n';
  }
}

inline void WriteEdgesCsv(const std::vector<GraphEdge>& edges, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(10) << "i,j,delta\n";
  for (const auto& e : edges) out << e.i << ',' << e.j << ',' << e.delta << '\n';
}

// Query image (rescaled to 8 bits) with the edges of front-facing mesh
// triangles drawn in white.
inline Raster<double> RenderOverlay(const IntensityImage& image, const TriangleMesh& mesh,
                                    const CameraIntrinsics& k, const CameraPose& pose) {
  double mx = 1.0;
  for (double v : image.values()) mx = std::max(mx, v);
  Raster<double> out(image.width(), image.height(), 0.0);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out(x, y) = 200.0 * image(x, y) / mx;
  }
  const ProjectionMatrix p = ComposeProjection(k, pose);
  const Vec3 center = pose.Center();
  const auto draw = [&](const Vec3& a, const Vec3& b) {
    if (pose.ToCamera(a).z() <= 1e-6 || pose.ToCamera(b).z() <= 1e-6) return;
    const Vec2 pa = p.Project(a).pixel;
    const Vec2 pb = p.Project(b).pixel;
    const int steps = static_cast<int>(std::ceil((pb - pa).lpNorm<Eigen::Infinity>())) + 1;
    if (steps > 4 * (image.width() + image.height())) return;
    for (int s = 0; s <= steps; ++s) {
      const Vec2 q = pa + (pb - pa) * (static_cast<double>(s) / steps);
      const int x = static_cast<int>(std::lround(q.x()));
      const int y = static_cast<int>(std::lround(q.y()));
      if (out.InBounds(x, y)) out(x, y) = 255.0;
    }
  };
  for (size_t f = 0; f < mesh.NumFaces(); ++f) {
    if (mesh.FaceNormalRaw(f).dot(mesh.Vertex(f, 0) - center) >= 0) continue;
    for (int c = 0; c < 3; ++c) draw(mesh.Vertex(f, c), mesh.Vertex(f, (c + 1) % 3));
  }
  return out;
}

}  // namespace asgreg
