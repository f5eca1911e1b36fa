#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "hdhuman/core/triangulate.hpp"
#include "hdhuman/recon/features.hpp"
#include "hdhuman/recon/marching_cubes.hpp"
#include "hdhuman/recon/occupancy.hpp"

namespace hdhuman::recon {

/// Sampling volume around a triangulated skeleton: bounding box of the
/// resolved joints grown by `dilation` times the hip-neck length.
inline Aabb skeleton_bounds(const TriangulatedSkeleton& skel, const SkeletonLayout& layout, double dilation = 0.75) {
  Aabb box;
  for (std::size_t j = 0; j < skel.skeleton.size(); ++j)
    if (skel.resolved[j]) box.extend(skel.skeleton[j]);
  const double body = (skel.skeleton[layout.hip] - skel.skeleton[layout.neck]).norm();
  box.lo.array() -= dilation * body;
  box.hi.array() += dilation * body;
  return box;
}

struct ReconstructOptions {
  QueryOptions query;
  TriangulationOptions triangulation;
  double threshold = kDefaultIsoThreshold;
  double bounds_dilation = 0.75;
  int threads = 1;
};

struct ReconstructInput {
  std::span<const Image> images;
  std::span<const Camera> cameras;
  std::span<const Skeleton2D> skeletons;
  const SkeletonLayout* layout;
  /// Optional per-view normal maps (empty span = none).
  std::span<const Image> normals;
};

struct Reconstruction {
  Mesh mesh;
  OccupancyField field;
  TriangulatedSkeleton skeleton;
};

/// Triangulate, encode each view, sample the occupancy lattice, extract the
/// iso-surface. `bounds` overrides the skeleton-derived sampling volume.
inline Reconstruction reconstruct(const ReconstructInput& input, const FeatureProvider& provider,
                                  const TransformerWeights& weights, const OccupancyHead& head,
                                  std::optional<Aabb> bounds, std::array<int, 3> resolution,
                                  const ReconstructOptions& options = {}) {
  const std::size_t n = input.cameras.size();
  if (input.images.size() != n || input.skeletons.size() != n)
    throw Error(ErrorCode::kInput, "images, cameras and skeletons must have one entry per view");
  if (!input.normals.empty() && input.normals.size() != n)
    throw Error(ErrorCode::kInput, "normal maps must cover every view");
  if (n < 2) throw Error(ErrorCode::kInsufficientViews, "reconstruction needs at least two views");
  if (!input.layout) throw Error(ErrorCode::kConfiguration, "missing skeleton layout");
  const SkeletonLayout& layout = *input.layout;
  layout.validate();

  std::vector<ViewObservation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(input.skeletons[i].joints.size()) != layout.joint_count())
      throw Error(ErrorCode::kInput, "skeleton of view " + std::to_string(i) + " does not match the layout");
    obs.push_back({&input.cameras[i], &input.skeletons[i]});
  }
  Reconstruction out;
  out.skeleton = triangulate_skeleton(obs, options.triangulation);
  if (!out.skeleton.resolved[layout.hip] || !out.skeleton.resolved[layout.neck])
    throw Error(ErrorCode::kInsufficientViews, "hip or neck joint seen in fewer than two views");
  const BodyAnchor body{out.skeleton.skeleton[layout.hip], out.skeleton.skeleton[layout.neck]};

  std::vector<FeatureMap> maps;
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Image& img = input.images[i];
    if (img.width() != input.cameras[i].width() || img.height() != input.cameras[i].height())
      throw Error(ErrorCode::kShape, "image " + std::to_string(i) + " does not match its camera resolution");
    maps.push_back(provider.encode(img, input.normals.empty() ? nullptr : &input.normals[i]));
  }
  std::vector<ViewFeatures> views;
  for (std::size_t i = 0; i < n; ++i) views.push_back({&maps[i], &input.cameras[i]});

  const Aabb box = bounds ? *bounds : skeleton_bounds(out.skeleton, layout, options.bounds_dilation);
  out.field = build_field(views, body, weights, head, box, resolution, options.query, options.threads);
  out.mesh = extract_surface(out.field, options.threshold);
  return out;
}

/// Debug dump: raw little-endian float32 values (x fastest) plus a JSON
/// sidecar describing the lattice.
inline void write_field(const std::filesystem::path& raw_path, const OccupancyField& field) {
  std::ofstream out(raw_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + raw_path.string());
  for (double v : field.values) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
  nlohmann::json side{{"resolution", field.resolution},
                      {"bounds", {{"min", {field.bounds.lo.x(), field.bounds.lo.y(), field.bounds.lo.z()}},
                                  {"max", {field.bounds.hi.x(), field.bounds.hi.y(), field.bounds.hi.z()}}}},
                      {"dtype", "float32"},
                      {"endianness", "little"},
                      {"order", "x-fastest"}};
  std::ofstream js(std::filesystem::path(raw_path).replace_extension(".json"));
  js << side.dump(2) << '\n';
}

inline OccupancyField read_field(const std::filesystem::path& raw_path) {
  std::ifstream js(std::filesystem::path(raw_path).replace_extension(".json"));
  if (!js) throw Error(ErrorCode::kIo, "missing field sidecar for " + raw_path.string());
  const auto side = nlohmann::json::parse(js);
  Aabb box;
  const auto lo = side.at("bounds").at("min"), hi = side.at("bounds").at("max");
  box.lo = Vec3(lo[0], lo[1], lo[2]);
  box.hi = Vec3(hi[0], hi[1], hi[2]);
  OccupancyField field(side.at("resolution").get<std::array<int, 3>>(), box);
  std::ifstream in(raw_path, std::ios::binary);
  for (double& v : field.values) {
    float f;
    in.read(reinterpret_cast<char*>(&f), sizeof(f));
    v = f;
  }
  if (!in) throw Error(ErrorCode::kIo, "truncated field " + raw_path.string());
  return field;
}

}  // namespace hdhuman::recon
