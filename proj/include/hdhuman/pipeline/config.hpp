#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "hdhuman/ibr/synthesis.hpp"
#include "hdhuman/io/json_io.hpp"
#include "hdhuman/pipeline/texture.hpp"
#include "hdhuman/recon/features.hpp"
#include "hdhuman/recon/marching_cubes.hpp"
#include "hdhuman/tracking/deform.hpp"
#include "hdhuman/tracking/ik.hpp"

namespace hdhuman::pipeline {

using io::json;
namespace fs = std::filesystem;

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr int kMinResolution = 8;
inline constexpr int kMaxResolution = 1024;

enum class Geometry { kSphere, kStickFigure, kMesh };

struct RingConfig {
  int count = 6;
  double radius = 3.0;
  double pitch_deg = 0.0;
  int width = 256;
  int height = 256;
  double focal = 280.0;
};

struct SceneConfig {
  Geometry geometry = Geometry::kSphere;
  fs::path mesh_path;  // for Geometry::kMesh
  double radius = 1.0;
  int sphere_level = 4;
  TexturePattern texture = TexturePattern::kGradient;
  RingConfig cameras;
  int frames = 1;               // animated frames for the stick figure
  double max_joint_angle = 0.4; // radians, stick-figure pose sampling
};

struct ReconConfig {
  std::string features = "rgb";
  std::string occupancy = "oracle";  // oracle (ground-truth SDF) or mlp (untrained)
  int resolution = 64;
  /// "skeleton": triangulated-skeleton box; "fixed": bounds_min/bounds_max.
  std::string bounds = "fixed";
  Vec3 bounds_min = Vec3::Constant(-1.5);
  Vec3 bounds_max = Vec3::Constant(1.5);
  double dilation = 0.75;
  int embed_dim = 64;
  double threshold = recon::kDefaultIsoThreshold;
  double depth_lambda = recon::kDefaultDepthLambda;
};

struct TrackConfig {
  int canonical = -1;  // -1: choose by skeleton spread
  std::string input = "recon";  // recon or ground_truth
  double lambda = tracking::kDefaultDeformLambda;
  double huber_delta = 0.01;
  int max_iterations = 50;
  std::string correspondence = "surface";
};

struct RenderConfig {
  int frame = 0;
  std::string geometry = "recon";  // recon, ground_truth or tracked
  /// Novel camera: a ring position in units of the ring spacing (0.5 sits
  /// between cameras 0 and 1), or a copy of source `novel_source`.
  double novel_ring_index = 0.5;
  int novel_source = -1;
  bool leave_out_novel_source = false;
  double lambda = ibr::kDefaultVisibilityLambda;
  std::string directions = "per_pixel";
  Vec3 background = Vec3::Zero();
};

struct EvalConfig {
  int samples = 100000;
};

struct PipelineConfig {
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  fs::path output = "hdhuman_out";
  std::optional<fs::path> calibration;  // defaults to the generated scene's
  SceneConfig scene;
  ReconConfig recon;
  TrackConfig track;
  RenderConfig render;
  EvalConfig eval;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfiguration, m); };
    if (threads < 1) fail("threads must be at least 1");
    if (recon.resolution < kMinResolution || recon.resolution > kMaxResolution)
      fail("grid resolution must lie in [8, 1024]");
    if (scene.cameras.count < 1) fail("scene needs at least one camera");
    if (scene.cameras.width < 1 || scene.cameras.height < 1 || !(scene.cameras.focal > 0.0))
      fail("invalid camera ring resolution or focal length");
    if (scene.frames < 1) fail("scene needs at least one frame");
    if (scene.geometry != Geometry::kStickFigure && scene.frames != 1) fail("only the stick figure is animated");
    if (!(scene.radius > 0.0)) fail("sphere radius must be positive");
    if (scene.geometry == Geometry::kMesh && !fs::exists(scene.mesh_path))
      fail("scene mesh '" + scene.mesh_path.string() + "' does not exist");
    if (calibration && !fs::exists(*calibration)) fail("calibration '" + calibration->string() + "' does not exist");
    if (recon.features != "rgb") fail("unknown feature provider '" + recon.features + "'");
    if (recon.occupancy != "oracle" && recon.occupancy != "mlp") fail("unknown occupancy head '" + recon.occupancy + "'");
    if (recon.bounds != "fixed" && recon.bounds != "skeleton") fail("bounds policy must be 'fixed' or 'skeleton'");
    if ((recon.bounds_max - recon.bounds_min).minCoeff() <= 0.0) fail("empty reconstruction bounds");
    if (recon.embed_dim < 1) fail("embed_dim must be positive");
    if (track.input != "recon" && track.input != "ground_truth") fail("track input must be 'recon' or 'ground_truth'");
    if (track.correspondence != "surface" && track.correspondence != "vertex")
      fail("correspondence must be 'surface' or 'vertex'");
    if (!(track.lambda > 0.0) || !(track.huber_delta > 0.0) || track.max_iterations < 1)
      fail("tracking lambda, huber_delta and max_iterations must be positive");
    if (render.geometry != "recon" && render.geometry != "ground_truth" && render.geometry != "tracked")
      fail("render geometry must be 'recon', 'ground_truth' or 'tracked'");
    if (render.directions != "per_pixel" && render.directions != "optical_axis")
      fail("render directions must be 'per_pixel' or 'optical_axis'");
    if (render.novel_source >= scene.cameras.count) fail("novel_source is not a scene camera");
    if (!(render.lambda > 0.0)) fail("visibility lambda must be positive");
    if (eval.samples < 1) fail("eval samples must be positive");
  }
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_vec(const json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = io::vec3_from_json(j.at(key));
}

inline Geometry geometry_from_string(const std::string& s) {
  if (s == "sphere") return Geometry::kSphere;
  if (s == "stick_figure") return Geometry::kStickFigure;
  if (s == "mesh") return Geometry::kMesh;
  throw Error(ErrorCode::kConfiguration, "unknown scene geometry '" + s + "'");
}

inline const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::kSphere: return "sphere";
    case Geometry::kStickFigure: return "stick_figure";
    case Geometry::kMesh: return "mesh";
  }
  return "?";
}

inline const char* to_string(TexturePattern t) { return t == TexturePattern::kGradient ? "gradient" : "checker"; }

}  // namespace detail

/// Relative paths inside the document resolve against `base`.
inline PipelineConfig config_from_json(const json& j, const fs::path& base = {}) {
  PipelineConfig c;
  try {
    std::uint64_t seed = c.seed;
    detail::read_opt(j, "seed", seed);
    c.seed = seed;
    detail::read_opt(j, "threads", c.threads);
    if (j.contains("output")) c.output = base / j.at("output").get<std::string>();
    if (j.contains("calibration")) c.calibration = base / j.at("calibration").get<std::string>();
    if (j.contains("scene")) {
      const json& s = j.at("scene");
      if (s.contains("geometry")) c.scene.geometry = detail::geometry_from_string(s.at("geometry").get<std::string>());
      if (s.contains("mesh_path")) c.scene.mesh_path = base / s.at("mesh_path").get<std::string>();
      detail::read_opt(s, "radius", c.scene.radius);
      detail::read_opt(s, "sphere_level", c.scene.sphere_level);
      if (s.contains("texture")) c.scene.texture = texture_from_string(s.at("texture").get<std::string>());
      detail::read_opt(s, "frames", c.scene.frames);
      detail::read_opt(s, "max_joint_angle", c.scene.max_joint_angle);
      if (s.contains("cameras")) {
        const json& r = s.at("cameras");
        detail::read_opt(r, "count", c.scene.cameras.count);
        detail::read_opt(r, "radius", c.scene.cameras.radius);
        detail::read_opt(r, "pitch_deg", c.scene.cameras.pitch_deg);
        detail::read_opt(r, "width", c.scene.cameras.width);
        detail::read_opt(r, "height", c.scene.cameras.height);
        detail::read_opt(r, "focal", c.scene.cameras.focal);
      }
    }
    if (j.contains("recon")) {
      const json& r = j.at("recon");
      detail::read_opt(r, "features", c.recon.features);
      detail::read_opt(r, "occupancy", c.recon.occupancy);
      detail::read_opt(r, "resolution", c.recon.resolution);
      detail::read_opt(r, "bounds", c.recon.bounds);
      detail::read_vec(r, "bounds_min", c.recon.bounds_min);
      detail::read_vec(r, "bounds_max", c.recon.bounds_max);
      detail::read_opt(r, "dilation", c.recon.dilation);
      detail::read_opt(r, "embed_dim", c.recon.embed_dim);
      detail::read_opt(r, "threshold", c.recon.threshold);
      detail::read_opt(r, "depth_lambda", c.recon.depth_lambda);
    }
    if (j.contains("track")) {
      const json& t = j.at("track");
      detail::read_opt(t, "canonical", c.track.canonical);
      detail::read_opt(t, "input", c.track.input);
      detail::read_opt(t, "lambda", c.track.lambda);
      detail::read_opt(t, "huber_delta", c.track.huber_delta);
      detail::read_opt(t, "max_iterations", c.track.max_iterations);
      detail::read_opt(t, "correspondence", c.track.correspondence);
    }
    if (j.contains("render")) {
      const json& r = j.at("render");
      detail::read_opt(r, "frame", c.render.frame);
      detail::read_opt(r, "geometry", c.render.geometry);
      detail::read_opt(r, "novel_ring_index", c.render.novel_ring_index);
      detail::read_opt(r, "novel_source", c.render.novel_source);
      detail::read_opt(r, "leave_out_novel_source", c.render.leave_out_novel_source);
      detail::read_opt(r, "lambda", c.render.lambda);
      detail::read_opt(r, "directions", c.render.directions);
      detail::read_vec(r, "background", c.render.background);
    }
    if (j.contains("eval")) detail::read_opt(j.at("eval"), "samples", c.eval.samples);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kConfiguration, "config file '" + path.string() + "' does not exist");
  json j;
  try {
    j = io::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfiguration, e.what());
  }
  return config_from_json(j, path.parent_path());
}

/// Output directory and thread count may come from the environment.
inline void apply_environment(PipelineConfig& c) {
  if (const char* out = std::getenv("HDHUMAN_OUT"); out && *out) c.output = out;
  if (const char* t = std::getenv("HDHUMAN_THREADS"); t && *t) {
    char* end = nullptr;
    const long v = std::strtol(t, &end, 10);
    if (*end != '\0' || v < 1) throw Error(ErrorCode::kConfiguration, "HDHUMAN_THREADS must be a positive integer");
    c.threads = static_cast<int>(v);
  }
}

/// Effective configuration; the output directory and thread count are left
/// out so they do not perturb content hashes.
inline json config_to_json(const PipelineConfig& c) {
  json j{{"seed", c.seed},
         {"scene",
          {{"geometry", detail::to_string(c.scene.geometry)},
           {"mesh_path", c.scene.mesh_path.string()},
           {"radius", c.scene.radius},
           {"sphere_level", c.scene.sphere_level},
           {"texture", detail::to_string(c.scene.texture)},
           {"frames", c.scene.frames},
           {"max_joint_angle", c.scene.max_joint_angle},
           {"cameras",
            {{"count", c.scene.cameras.count},
             {"radius", c.scene.cameras.radius},
             {"pitch_deg", c.scene.cameras.pitch_deg},
             {"width", c.scene.cameras.width},
             {"height", c.scene.cameras.height},
             {"focal", c.scene.cameras.focal}}}}},
         {"recon",
          {{"features", c.recon.features},
           {"occupancy", c.recon.occupancy},
           {"resolution", c.recon.resolution},
           {"bounds", c.recon.bounds},
           {"bounds_min", io::to_json(c.recon.bounds_min)},
           {"bounds_max", io::to_json(c.recon.bounds_max)},
           {"dilation", c.recon.dilation},
           {"embed_dim", c.recon.embed_dim},
           {"threshold", c.recon.threshold},
           {"depth_lambda", c.recon.depth_lambda}}},
         {"track",
          {{"canonical", c.track.canonical},
           {"input", c.track.input},
           {"lambda", c.track.lambda},
           {"huber_delta", c.track.huber_delta},
           {"max_iterations", c.track.max_iterations},
           {"correspondence", c.track.correspondence}}},
         {"render",
          {{"frame", c.render.frame},
           {"geometry", c.render.geometry},
           {"novel_ring_index", c.render.novel_ring_index},
           {"novel_source", c.render.novel_source},
           {"leave_out_novel_source", c.render.leave_out_novel_source},
           {"lambda", c.render.lambda},
           {"directions", c.render.directions},
           {"background", io::to_json(c.render.background)}}},
         {"eval", {{"samples", c.eval.samples}}}};
  if (c.calibration) j["calibration"] = c.calibration->string();
  return j;
}

}  // namespace hdhuman::pipeline
