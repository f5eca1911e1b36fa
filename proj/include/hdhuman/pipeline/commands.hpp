#pragma once

#include <chrono>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hdhuman/ibr/synthesis.hpp"
#include "hdhuman/metrics/metrics.hpp"
#include "hdhuman/pipeline/scene.hpp"
#include "hdhuman/recon/reconstruct.hpp"
#include "hdhuman/spatial/aabb_tree.hpp"
#include "hdhuman/tracking/sequence.hpp"
#include "hdhuman/tracking/tracking_io.hpp"

namespace hdhuman::pipeline {

/// Process exit status for an error category.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfiguration: return 2;
    case ErrorCode::kSolverDiverged: return 4;
    default: return 3;
  }
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline fs::path scene_dir(const PipelineConfig& c) { return c.output / "scene"; }

inline fs::path calibration_path(const PipelineConfig& c) {
  return c.calibration ? *c.calibration : scene_dir(c) / "calibration.json";
}

inline io::Calibration load_calibration(const PipelineConfig& c) {
  return io::read_calibration(require(calibration_path(c), "calibration"));
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json triangulated_to_json(const TriangulatedSkeleton& s) {
  json j = io::skeleton3d_to_json(s.skeleton);
  j["resolved"] = s.resolved;
  j["view_counts"] = s.view_counts;
  return j;
}

inline std::vector<bool> resolved_from_json(const json& j, std::size_t joints) {
  if (!j.contains("resolved")) return std::vector<bool>(joints, true);
  return j.at("resolved").get<std::vector<bool>>();
}

}  // namespace detail

inline json cmd_gen_scene(const PipelineConfig& config) {
  const detail::Stopwatch clock;
  const Scene scene = generate_scene(config);
  Manifest m{"scene", config_to_json(config)};
  if (config.scene.geometry == Geometry::kMesh) m.inputs.push_back(config.scene.mesh_path);
  m.outputs = write_scene(scene, detail::scene_dir(config));
  m.results = {{"frames", scene.frames.size()}, {"views", scene.calibration.cameras.size()}};
  m.seconds = clock.seconds();
  return write_manifest(m, config.output);
}

inline json cmd_reconstruct(const PipelineConfig& config) {
  const detail::Stopwatch clock;
  const io::Calibration calib = detail::load_calibration(config);
  const SceneInfo info = read_scene_info(detail::scene_dir(config));
  Manifest m{"recon", config_to_json(config)};
  m.inputs.push_back(detail::calibration_path(config));

  const recon::RgbFeatureProvider provider;
  const int input_dim = provider.channels(0) + 1;  // normalised depth column
  const auto weights = recon::TransformerWeights::random(input_dim, config.recon.embed_dim, config.seed);
  recon::ReconstructOptions opts;
  opts.query.depth_lambda = config.recon.depth_lambda;
  opts.threshold = config.recon.threshold;
  opts.bounds_dilation = config.recon.dilation;
  opts.threads = config.threads;
  std::optional<Aabb> box;
  if (config.recon.bounds == "fixed") box = Aabb{config.recon.bounds_min, config.recon.bounds_max};
  const int r = config.recon.resolution;

  json frames = json::array();
  for (std::size_t f = 0; f < info.frames; ++f) {
    const fs::path in_dir = detail::scene_dir(config) / frame_name(f);
    const FrameViews views = read_frame_views(in_dir, calib.cameras.size());
    m.inputs.insert(m.inputs.end(), views.files.begin(), views.files.end());
    // The oracle head stands in for a trained network by reading the
    // ground-truth surface.
    std::unique_ptr<recon::OccupancyHead> head;
    if (config.recon.occupancy == "oracle") {
      if (info.geometry == Geometry::kSphere) {
        head = std::make_unique<recon::OracleHead>(recon::sphere_sdf(Vec3::Zero(), info.radius));
      } else {
        const fs::path gt = require(in_dir / "mesh.ply", "ground-truth mesh for the oracle head");
        m.inputs.push_back(gt);
        head = std::make_unique<recon::OracleHead>(recon::MeshSdf(io::read_ply(gt)));
      }
    } else {
      const std::vector<int> hidden{32};
      head = std::make_unique<recon::MlpHead>(recon::MlpHead::random(config.recon.embed_dim + 1, hidden, config.seed));
    }
    const recon::ReconstructInput input{views.images, calib.cameras, views.skeletons, &calib.layout, {}};
    const recon::Reconstruction rec = recon::reconstruct(input, provider, weights, *head, box, {r, r, r}, opts);
    const fs::path out_dir = config.output / "recon" / frame_name(f);
    fs::create_directories(out_dir);
    io::write_ply(out_dir / "mesh.ply", rec.mesh);
    io::write_json(out_dir / "skeleton3d.json", detail::triangulated_to_json(rec.skeleton));
    m.outputs.insert(m.outputs.end(), {out_dir / "mesh.ply", out_dir / "skeleton3d.json"});
    frames.push_back({{"frame", f},
                      {"vertices", rec.mesh.vertices.size()},
                      {"triangles", rec.mesh.triangles.size()},
                      {"watertight", is_watertight(rec.mesh)},
                      {"voxel", (rec.field.bounds.hi - rec.field.bounds.lo).maxCoeff() / (r - 1)}});
  }
  m.results = {{"frames", frames}};
  m.seconds = clock.seconds();
  return write_manifest(m, config.output);
}

namespace detail {

inline json track_stage(const PipelineConfig& config) {
  const detail::Stopwatch clock;
  const io::Calibration calib = detail::load_calibration(config);
  const SceneInfo info = read_scene_info(detail::scene_dir(config));
  Manifest m{"track", config_to_json(config)};
  const bool truth_input = config.track.input == "ground_truth";

  std::vector<Mesh> meshes;
  std::vector<Skeleton3D> skeletons;
  tracking::TrackingOptions opts;
  for (std::size_t f = 0; f < info.frames; ++f) {
    const fs::path dir = (truth_input ? detail::scene_dir(config) : config.output / "recon") / frame_name(f);
    const fs::path mesh = require(dir / "mesh.ply", "frame mesh"), skel = require(dir / "skeleton3d.json", "3D skeleton");
    m.inputs.insert(m.inputs.end(), {mesh, skel});
    Mesh mm = io::read_ply(mesh);
    mm.attributes.clear();
    meshes.push_back(std::move(mm));
    const json sj = io::read_json(skel);
    skeletons.push_back(io::skeleton3d_from_json(sj));
    opts.joint_masks.push_back(detail::resolved_from_json(sj, skeletons.back().size()));
  }
  opts.ik.huber_delta = config.track.huber_delta;
  opts.ik.solver.max_iterations = config.track.max_iterations;
  opts.refine.solver.max_iterations = config.track.max_iterations;
  opts.deform.solver.max_iterations = config.track.max_iterations;
  opts.deform.lambda = config.track.lambda;
  const auto mode = config.track.correspondence == "vertex" ? tracking::CorrespondenceMode::kVertex
                                                             : tracking::CorrespondenceMode::kSurface;
  opts.refine.correspondence = opts.deform.correspondence = mode;
  opts.threads = config.threads;
  if (config.track.canonical >= static_cast<int>(info.frames))
    throw Error(ErrorCode::kConfiguration, "canonical frame index out of range");
  const int canonical = config.track.canonical >= 0 ? config.track.canonical : tracking::select_canonical_frame(skeletons);

  const tracking::TrackingResult result =
      tracking::track_sequence(canonical, meshes, skeletons, calib.layout.parents, opts);
  const fs::path out = config.output / "track";
  fs::create_directories(out);
  tracking::write_weights(out / "weights.json", result.weights);
  m.outputs.push_back(out / "weights.json");
  json frames = json::array();
  for (std::size_t f = 0; f < result.frames.size(); ++f) {
    const tracking::FrameTrack& ft = result.frames[f];
    const fs::path mesh = out / (frame_name(f) + ".ply"), params = out / ("params_" + frame_name(f).substr(6) + ".json");
    io::write_ply(mesh, ft.mesh);
    tracking::write_params(params, ft.params);
    m.outputs.insert(m.outputs.end(), {mesh, params});
    // Distance of every tracked vertex to that frame's input surface.
    const auto tree = spatial::AabbTree::over_triangles(meshes[f]);
    double mean = 0.0, worst = 0.0;
    for (const auto& v : ft.mesh.vertices) {
      const double d = std::sqrt(tree.closest(v).squared_distance);
      mean += d;
      worst = std::max(worst, d);
    }
    json entry{{"frame", f},
               {"fallback", ft.fallback},
               {"warning", ft.warning},
               {"refine_energy_before", ft.refine_energy_before},
               {"refine_energy_after", ft.refine_energy_after},
               {"mean_surface_distance", mean / ft.mesh.vertices.size()},
               {"max_surface_distance", worst}};
    // Vertex-wise error exists when the input shares the tracked topology.
    if (meshes[f].triangles == ft.mesh.triangles) {
      double err = 0.0;
      for (std::size_t v = 0; v < ft.mesh.vertices.size(); ++v)
        err = std::max(err, (ft.mesh.vertices[v] - meshes[f].vertices[v]).norm());
      entry["vertex_error"] = err;
    }
    frames.push_back(std::move(entry));
  }
  m.results = {{"canonical", canonical}, {"frames", frames}};
  m.seconds = clock.seconds();
  return write_manifest(m, config.output);
}

/// Solver failure once outputs exist, so fallback frames still get reported.
inline void check_tracking(const json& manifest) {
  std::string failed;
  for (const auto& f : manifest.at("results").at("frames"))
    if (f.at("fallback").get<bool>()) failed += (failed.empty() ? "" : ", ") + std::to_string(f.at("frame").get<int>());
  if (!failed.empty())
    throw Error(ErrorCode::kSolverDiverged,
                "tracking fell back to the previous frame for frame(s) " + failed + "; see track/manifest.json");
}

}  // namespace detail

inline json cmd_track(const PipelineConfig& config) {
  json manifest = detail::track_stage(config);
  detail::check_tracking(manifest);
  return manifest;
}

namespace detail {

inline Camera novel_camera(const PipelineConfig& c, const io::Calibration& calib) {
  if (c.render.novel_source >= 0) {
    if (c.render.novel_source >= static_cast<int>(calib.cameras.size()))
      throw Error(ErrorCode::kConfiguration, "novel_source is not a calibrated camera");
    return calib.cameras[c.render.novel_source];
  }
  return ring_camera_at(c.scene.cameras, c.render.novel_ring_index);
}

inline fs::path render_geometry_path(const PipelineConfig& c) {
  const std::string frame = frame_name(static_cast<std::size_t>(c.render.frame));
  if (c.render.geometry == "ground_truth") return scene_dir(c) / frame / "mesh.ply";
  if (c.render.geometry == "tracked") return c.output / "track" / (frame + ".ply");
  return c.output / "recon" / frame / "mesh.ply";
}

}  // namespace detail

inline json cmd_render(const PipelineConfig& config) {
  const detail::Stopwatch clock;
  const io::Calibration calib = detail::load_calibration(config);
  const SceneInfo info = read_scene_info(detail::scene_dir(config));
  if (config.render.frame < 0 || config.render.frame >= static_cast<int>(info.frames))
    throw Error(ErrorCode::kConfiguration, "render frame out of range");
  Manifest m{"render", config_to_json(config)};
  const fs::path frame_dir = detail::scene_dir(config) / frame_name(config.render.frame);
  const FrameViews views = read_frame_views(frame_dir, calib.cameras.size());
  m.inputs = views.files;
  m.inputs.push_back(detail::calibration_path(config));
  const fs::path geom_path = require(detail::render_geometry_path(config), "render geometry");
  m.inputs.push_back(geom_path);
  const Mesh geometry = io::read_ply(geom_path);

  std::vector<ibr::SourceView> sources;
  for (std::size_t n = 0; n < calib.cameras.size(); ++n) {
    if (config.render.leave_out_novel_source && static_cast<int>(n) == config.render.novel_source) continue;
    sources.push_back({calib.cameras[n], views.images[n], {}});
  }
  const Camera novel = detail::novel_camera(config, calib);
  ibr::SynthesisOptions opts;
  opts.lambda = config.render.lambda;
  opts.directions =
      config.render.directions == "optical_axis" ? ibr::DirectionMode::kOpticalAxis : ibr::DirectionMode::kPerPixel;
  opts.threads = config.threads;
  const ibr::SynthesisOutput s = ibr::synthesize_view(sources, geometry, novel, opts);
  const Image rgb = ibr::decode(s, ibr::IdentityDecoder(config.render.background));

  // Reference: the source image itself, else the ground truth seen from the
  // novel camera.
  std::optional<Image> reference;
  if (config.render.novel_source >= 0) {
    reference = views.images[config.render.novel_source];
  } else if (const fs::path gt = frame_dir / "mesh.ply"; fs::exists(gt)) {
    m.inputs.push_back(gt);
    const Mesh truth = io::read_ply(gt);
    if (truth.has_attribute("color")) reference = raster::render_attributes(truth, novel, "color").values;
  }

  const fs::path out = config.output / "render";
  fs::create_directories(out);
  io::write_png(out / "novel.png", rgb);
  io::write_mask_png(out / "holes.png", s.holes);
  io::write_pfm(out / "visible_count.pfm", s.visible_views);
  io::write_json(out / "novel_camera.json", io::camera_to_json(novel));
  m.outputs = {out / "novel.png", out / "holes.png", out / "visible_count.pfm", out / "novel_camera.json"};
  m.results = {{"hole_fraction", static_cast<double>(s.holes.count()) / s.holes.values.size()},
               {"sources", sources.size()}};
  if (reference) {
    io::write_png(out / "reference.png", *reference);
    m.outputs.push_back(out / "reference.png");
    Mask covered = s.holes;
    for (auto& v : covered.values) v = !v;
    if (covered.count() > 0) {
      // Compare what was written, both 8-bit quantised.
      const double p = metrics::psnr(io::quantize_8bit(rgb), io::quantize_8bit(*reference), &covered);
      m.results["psnr_covered"] = detail::finite_or_null(p);
      m.results["psnr_infinite"] = std::isinf(p);
    }
  }
  m.seconds = clock.seconds();
  return write_manifest(m, config.output);
}

inline json cmd_eval(const PipelineConfig& config) {
  const detail::Stopwatch clock;
  const SceneInfo info = read_scene_info(detail::scene_dir(config));
  Manifest m{"eval", config_to_json(config)};
  std::vector<metrics::MetricReport> reports;
  const int samples = config.eval.samples;
  for (std::size_t f = 0; f < info.frames; ++f) {
    const fs::path rec = config.output / "recon" / frame_name(f) / "mesh.ply";
    if (!fs::exists(rec)) continue;
    const fs::path gt = require(detail::scene_dir(config) / frame_name(f) / "mesh.ply", "ground-truth mesh");
    m.inputs.insert(m.inputs.end(), {rec, gt});
    const Mesh a = io::read_ply(rec), b = io::read_ply(gt);
    auto c = metrics::chamfer_report(a, b, samples, config.seed);
    auto p = metrics::p2s_report(a, b, samples, config.seed);
    c.parameters["frame"] = p.parameters["frame"] = f;
    reports.push_back(std::move(c));
    reports.push_back(std::move(p));
  }
  const fs::path novel = config.output / "render" / "novel.png", ref = config.output / "render" / "reference.png",
                 holes = config.output / "render" / "holes.png";
  if (fs::exists(novel) && fs::exists(ref) && fs::exists(holes)) {
    m.inputs.insert(m.inputs.end(), {novel, ref, holes});
    const Image a = io::read_png(novel), b = io::read_png(ref), h = io::read_png(holes);
    Mask covered(h.width(), h.height());
    for (int y = 0; y < h.height(); ++y)
      for (int x = 0; x < h.width(); ++x) covered.at(x, y) = h.at(x, y, 0) < 0.5;
    if (covered.count() > 0) reports.push_back(metrics::psnr_report(a, b, &covered));
    reports.push_back(metrics::ssim_report(a, b));
  }
  if (reports.empty())
    throw Error(ErrorCode::kInput, "nothing to evaluate: expected recon/ or render/ outputs under " +
                                       config.output.string());
  json doc = metrics::report_json(reports);
  if (const fs::path tm = config.output / "track" / "manifest.json"; fs::exists(tm)) {
    m.inputs.push_back(tm);
    const json track_manifest = io::read_json(tm);
    json tracking = json::array();
    for (const auto& fr : track_manifest.at("results").at("frames")) {
      json e{{"frame", fr.at("frame")}, {"mean_surface_distance", fr.at("mean_surface_distance")}};
      if (fr.contains("vertex_error")) e["vertex_error"] = fr.at("vertex_error");
      tracking.push_back(std::move(e));
    }
    doc["tracking"] = std::move(tracking);
  }
  const fs::path out = config.output / "eval";
  fs::create_directories(out);
  io::write_json(out / "report.json", doc);
  m.outputs = {out / "report.json"};
  m.results = doc;
  m.seconds = clock.seconds();
  return write_manifest(m, config.output);
}

inline json cmd_all(const PipelineConfig& config) {
  json out;
  out["scene"] = cmd_gen_scene(config);
  out["recon"] = cmd_reconstruct(config);
  out["track"] = detail::track_stage(config);
  out["render"] = cmd_render(config);
  out["eval"] = cmd_eval(config);
  detail::check_tracking(out["track"]);
  return out;
}

}  // namespace hdhuman::pipeline
