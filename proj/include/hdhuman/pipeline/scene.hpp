#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "hdhuman/io/image_io.hpp"
#include "hdhuman/io/json_io.hpp"
#include "hdhuman/io/mesh_io.hpp"
#include "hdhuman/pipeline/config.hpp"
#include "hdhuman/raster/rasterizer.hpp"
#include "hdhuman/tracking/skinning.hpp"
#include "hdhuman/tracking/tracking_io.hpp"

namespace hdhuman::pipeline {

/// Four-joint chain centred near the origin, about 1.3 m tall.
inline std::vector<Point3> stick_figure_joints() {
  const Vec3 c(0.1, 0.65, 0.0);
  return {Vec3(0, 0, 0) - c, Vec3(0.02, 0.45, 0.03) - c, Vec3(0.1, 0.9, -0.02) - c, Vec3(0.25, 1.3, 0.0) - c};
}

inline constexpr double kStickRadiusA = 0.15;
inline constexpr double kStickRadiusB = 0.10;

struct SceneFrame {
  Mesh mesh;                        // ground truth, with a "color" channel
  Skeleton3D skeleton;              // ground-truth joints
  std::optional<tracking::KinematicParams> params;  // stick figure only
  std::vector<Image> images;
  std::vector<DepthMap> depths;
  std::vector<Skeleton2D> skeletons;  // projected ground-truth joints
};

struct Scene {
  io::Calibration calibration;
  Geometry geometry = Geometry::kSphere;
  double radius = 1.0;  // sphere scenes
  std::vector<SceneFrame> frames;
};

inline std::vector<Camera> ring_cameras(const RingConfig& r) {
  std::vector<Camera> cams;
  for (int i = 0; i < r.count; ++i)
    cams.push_back(ring_camera(i, r.count, r.radius, r.pitch_deg * M_PI / 180.0, r.focal, r.width, r.height));
  return cams;
}

/// Ring camera at a fractional position; index i reproduces ring camera i.
inline Camera ring_camera_at(const RingConfig& r, double index) {
  const double yaw = 2.0 * M_PI * index / r.count, pitch = r.pitch_deg * M_PI / 180.0;
  const Vec3 eye = r.radius * Vec3(std::sin(yaw) * std::cos(pitch), std::sin(pitch), std::cos(yaw) * std::cos(pitch));
  return Camera::look_at(eye, Vec3::Zero(), Vec3::UnitY(), r.focal, r.width, r.height, "novel");
}

inline void observe(SceneFrame& f, const std::vector<Camera>& cams) {
  for (const Camera& cam : cams) {
    const raster::Fragments frags = raster::rasterize(f.mesh, cam);
    f.images.push_back(raster::resolve_attributes(f.mesh, frags, "color").values);
    f.depths.push_back(frags.depth);
    Skeleton2D sk;
    for (const auto& j : f.skeleton.joints) {
      // Joints behind a camera are reported with zero confidence.
      if (cam.depth_of(j) > 0.0)
        sk.joints.push_back({cam.project(j).pixel, 1.0});
      else
        sk.joints.push_back({Pixel::Zero(), 0.0});
    }
    f.skeletons.push_back(std::move(sk));
  }
}

inline Scene generate_scene(const PipelineConfig& config) {
  const SceneConfig& sc = config.scene;
  Scene s;
  s.geometry = sc.geometry;
  s.radius = sc.radius;
  s.calibration.cameras = ring_cameras(sc.cameras);
  std::mt19937_64 rng(config.seed);

  if (sc.geometry == Geometry::kStickFigure) {
    s.calibration.layout = SkeletonLayout::chain(4, 0, 1);
    const tracking::KinematicTree tree(s.calibration.layout.parents, stick_figure_joints());
    Mesh canonical = make_tube(tree.rest(), kStickRadiusA, kStickRadiusB, 32, 0.03);
    apply_texture(canonical, sc.texture, Vec3::Zero());
    const tracking::SkinningWeights weights = tracking::rig(canonical, tree);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int f = 0; f < sc.frames; ++f) {
      tracking::KinematicParams p = tracking::KinematicParams::zero(tree.joint_count());
      if (f > 0) {
        for (int j = 0; j < tree.joint_count(); ++j) {
          const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
          p.theta.row(j) = (axis * sc.max_joint_angle * std::abs(u(rng))).transpose();
        }
        p.root_translation = 0.1 * Vec3(u(rng), 0.0, u(rng));
      }
      SceneFrame frame;
      frame.mesh = tracking::lbs_deform(canonical, weights, tree, p);
      frame.skeleton = tracking::forward_kinematics(tree, p);
      frame.params = p;
      s.frames.push_back(std::move(frame));
    }
  } else {
    SceneFrame frame;
    if (sc.geometry == Geometry::kSphere) {
      frame.mesh = make_icosphere(sc.sphere_level, sc.radius);
      frame.skeleton.joints = {{0, -0.5 * sc.radius, 0}, {0, 0.5 * sc.radius, 0}};
    } else {
      frame.mesh = io::read_mesh(sc.mesh_path);
      const Aabb box = bounds(frame.mesh);
      const Vec3 c = box.center();
      const double h = box.hi.y() - box.lo.y();
      frame.skeleton.joints = {c - Vec3(0, 0.25 * h, 0), c + Vec3(0, 0.25 * h, 0)};
    }
    if (!frame.mesh.has_attribute("color")) apply_texture(frame.mesh, sc.texture, bounds(frame.mesh).center());
    s.calibration.layout = SkeletonLayout::chain(2, 0, 1);
    s.frames.push_back(std::move(frame));
  }
  for (auto& f : s.frames) observe(f, s.calibration.cameras);
  return s;
}

// ---- on-disk layout ---------------------------------------------------------

inline std::string frame_name(std::size_t f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03zu", f);
  return buf;
}

inline std::string view_file(const char* stem, std::size_t v, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02zu.%s", stem, v, ext);
  return buf;
}

/// Existing file or an input error naming what was expected.
inline const fs::path& require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p))
    throw Error(ErrorCode::kInput, "missing " + what + ": expected " + p.string() + " (run the upstream command)");
  return p;
}

inline std::vector<fs::path> write_scene(const Scene& s, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> files;
  io::write_json(dir / "calibration.json", io::calibration_to_json(s.calibration));
  files.push_back(dir / "calibration.json");
  io::write_json(dir / "scene.json", {{"geometry", detail::to_string(s.geometry)},
                                      {"radius", s.radius},
                                      {"frames", s.frames.size()},
                                      {"views", s.calibration.cameras.size()}});
  files.push_back(dir / "scene.json");
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    const SceneFrame& fr = s.frames[f];
    const fs::path fd = dir / frame_name(f);
    fs::create_directories(fd);
    io::write_ply(fd / "mesh.ply", fr.mesh);
    io::write_json(fd / "skeleton3d.json", io::skeleton3d_to_json(fr.skeleton));
    files.insert(files.end(), {fd / "mesh.ply", fd / "skeleton3d.json"});
    if (fr.params) {
      tracking::write_params(fd / "params.json", *fr.params);
      files.push_back(fd / "params.json");
    }
    for (std::size_t v = 0; v < fr.images.size(); ++v) {
      const fs::path img = fd / view_file("view", v, "png"), depth = fd / view_file("depth", v, "pfm"),
                     sk = fd / view_file("skeleton2d", v, "json");
      io::write_png(img, fr.images[v]);
      io::write_depth_pfm(depth, fr.depths[v]);
      io::write_json(sk, io::skeleton2d_to_json(fr.skeletons[v]));
      files.insert(files.end(), {img, depth, sk});
    }
  }
  return files;
}

struct SceneInfo {
  Geometry geometry = Geometry::kSphere;
  double radius = 1.0;
  std::size_t frames = 0;
};

inline SceneInfo read_scene_info(const fs::path& dir) {
  const json j = io::read_json(require(dir / "scene.json", "scene description"));
  SceneInfo info;
  info.geometry = detail::geometry_from_string(j.at("geometry").get<std::string>());
  info.radius = j.at("radius").get<double>();
  info.frames = j.at("frames").get<std::size_t>();
  return info;
}

/// Views of one frame as stored on disk (PNG colours, so 8-bit quantised).
struct FrameViews {
  std::vector<Image> images;
  std::vector<Skeleton2D> skeletons;
  std::vector<fs::path> files;
};

inline FrameViews read_frame_views(const fs::path& frame_dir, std::size_t views) {
  FrameViews out;
  for (std::size_t v = 0; v < views; ++v) {
    const fs::path img = frame_dir / view_file("view", v, "png"), sk = frame_dir / view_file("skeleton2d", v, "json");
    out.images.push_back(io::read_png(require(img, "view image")));
    out.skeletons.push_back(io::skeleton2d_from_json(io::read_json(require(sk, "2D skeleton"))));
    out.files.insert(out.files.end(), {img, sk});
  }
  return out;
}

// ---- run manifests ----------------------------------------------------------

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot hash " + p.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes));
}

/// Paths are recorded relative to the output root so manifests do not depend
/// on where a run lives. Upstream manifests contribute their content hash,
/// which leaves out timing.
inline json file_list(const std::vector<fs::path>& files, const fs::path& root) {
  json list = json::array();
  for (const auto& f : files) {
    const std::string hash =
        f.filename() == "manifest.json" ? io::read_json(f).at("content_hash").get<std::string>() : file_hash(f);
    list.push_back({{"path", fs::relative(f, root).generic_string()}, {"fnv1a", hash}});
  }
  return list;
}

struct Manifest {
  std::string stage;
  json config;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json results = json::object();
  double seconds = 0.0;
};

/// `content_hash` covers everything except the timing block.
inline json write_manifest(const Manifest& m, const fs::path& root) {
  json doc{{"stage", m.stage},
           {"config", m.config},
           {"inputs", file_list(m.inputs, root)},
           {"outputs", file_list(m.outputs, root)},
           {"results", m.results}};
  doc["content_hash"] = hex64(fnv1a(doc.dump()));
  doc["timing"] = {{"seconds", m.seconds}};
  const fs::path dir = root / m.stage;
  fs::create_directories(dir);
  io::write_json(dir / "manifest.json", doc);
  return doc;
}

}  // namespace hdhuman::pipeline
