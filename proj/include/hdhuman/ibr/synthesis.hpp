#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/image.hpp"
#include "hdhuman/core/mesh.hpp"
#include "hdhuman/raster/rasterizer.hpp"

namespace hdhuman::ibr {

/// Relative depth agreement needed to call a source view visible.
inline constexpr double kDefaultVisibilityLambda = 0.01;

struct SourceView {
  Camera camera;
  FeatureMap features;
  DepthMap depth;  // may be left empty; synthesize_view renders it

  void validate() const {
    if (features.width() != camera.width() || features.height() != camera.height())
      throw Error(ErrorCode::kShape, "feature map of view '" + camera.name() + "' does not match its camera");
    if (!depth.empty() && (depth.width() != camera.width() || depth.height() != camera.height()))
      throw Error(ErrorCode::kShape, "depth map of view '" + camera.name() + "' does not match its camera");
  }
};

/// Where a novel-view surface point lands in one source view.
struct Reprojection {
  Pixel pixel = Pixel::Zero();
  double depth = 0.0;         // camera-space z in the source view
  double render_depth = 0.0;  // source depth map at the nearest pixel
  bool in_view = false;       // in front of the source camera and inside its image
};

inline Reprojection reproject_point(const Point3& world, const Camera& source, const DepthMap& source_depth) {
  Reprojection r;
  r.depth = source.depth_of(world);
  if (!(r.depth > 0.0)) return r;
  r.pixel = source.project(world).pixel;
  r.in_view = source.in_image(r.pixel);
  if (!r.in_view) return r;
  // Nearest pixel: interpolating across a depth edge would invent surfaces.
  const int x = std::clamp(static_cast<int>(std::lround(r.pixel.x())), 0, source_depth.width() - 1);
  const int y = std::clamp(static_cast<int>(std::lround(r.pixel.y())), 0, source_depth.height() - 1);
  r.render_depth = source_depth.at(x, y);
  return r;
}

/// Reprojects novel pixel `p` (at its rendered novel depth) into `source`.
inline Reprojection reproject_pixel(const Pixel& p, const Camera& novel, const DepthMap& novel_depth,
                                    const Camera& source, const DepthMap& source_depth) {
  const int x = static_cast<int>(std::lround(p.x())), y = static_cast<int>(std::lround(p.y()));
  if (x < 0 || y < 0 || x >= novel_depth.width() || y >= novel_depth.height() || !novel_depth.covered(x, y))
    throw Error(ErrorCode::kNoGeometry, "novel pixel has no geometry");
  return reproject_point(novel.unproject(p, novel_depth.at(x, y)), source, source_depth);
}

inline bool is_visible(const Reprojection& r, double lambda = kDefaultVisibilityLambda) {
  if (!r.in_view || !(r.depth > 0.0)) return false;
  return std::abs(r.render_depth - r.depth) < lambda * std::min(r.render_depth, r.depth);
}

enum class DirectionMode {
  kPerPixel,     // surface point toward each camera center
  kOpticalAxis,  // negated forward axis of each camera
};

inline Vec3 view_direction(const Camera& cam, const Point3& surface, DirectionMode mode) {
  if (mode == DirectionMode::kOpticalAxis) return -cam.rotation().row(2).transpose();
  return (cam.center() - surface).normalized();
}

/// Normalised max(0, cos) weights. Empty when every weight is zero.
inline std::vector<double> direction_weights(std::span<const Vec3> dirs, const Vec3& novel_dir) {
  std::vector<double> w(dirs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    w[k] = std::max(0.0, dirs[k].dot(novel_dir));
    total += w[k];
  }
  if (!(total > 0.0)) return {};
  for (double& v : w) v /= total;
  return w;
}

/// Direction-weighted average of per-view features; nullopt is a hole.
inline std::optional<Eigen::VectorXd> integrate_features(std::span<const Eigen::VectorXd> features,
                                                         std::span<const Vec3> dirs, const Vec3& novel_dir) {
  if (features.empty() || features.size() != dirs.size())
    throw Error(ErrorCode::kShape, "need one direction per feature vector and at least one view");
  const std::vector<double> w = direction_weights(dirs, novel_dir);
  if (w.empty()) return std::nullopt;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features[0].size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].size() != out.size()) throw Error(ErrorCode::kShape, "feature vectors differ in length");
    out += w[k] * features[k];
  }
  return out;
}

struct SynthesisOptions {
  double lambda = kDefaultVisibilityLambda;
  DirectionMode directions = DirectionMode::kPerPixel;
  int threads = 1;
};

struct SynthesisOutput {
  FeatureMap features;     // zero on holes
  Mask holes;              // no geometry, or no visible source with positive weight
  DepthMap depth;          // novel-view depth
  Image visible_views;     // 1 channel: number of visible sources per pixel
};

/// Renders the novel depth and, where missing, every source depth from
/// `geometry`; then reprojects, tests visibility and blends per pixel.
inline SynthesisOutput synthesize_view(std::span<const SourceView> sources, const Mesh& geometry,
                                       const Camera& novel, const SynthesisOptions& options = {}) {
  if (sources.empty()) throw Error(ErrorCode::kInsufficientViews, "view synthesis needs at least one source view");
  if (geometry.triangles.empty()) throw Error(ErrorCode::kNoGeometry, "view synthesis needs a non-empty mesh");
  if (!(options.lambda > 0.0)) throw Error(ErrorCode::kConfiguration, "visibility lambda must be positive");
  geometry.validate();
  const int channels = sources[0].features.channels();
  std::vector<DepthMap> source_depth(sources.size());
  for (std::size_t n = 0; n < sources.size(); ++n) {
    sources[n].validate();
    if (sources[n].features.channels() != channels)
      throw Error(ErrorCode::kConfiguration, "source views carry different feature channel counts");
    source_depth[n] = sources[n].depth.empty() ? raster::render_depth(geometry, sources[n].camera) : sources[n].depth;
  }

  const int w = novel.width(), h = novel.height();
  SynthesisOutput out{FeatureMap(w, h, channels), Mask(w, h, 1), raster::render_depth(geometry, novel),
                      Image(w, h, 1)};

  auto row = [&](int y) {
    std::vector<Eigen::VectorXd> feats;
    std::vector<Vec3> dirs;
    Eigen::VectorXd f(channels);
    for (int x = 0; x < w; ++x) {
      if (!out.depth.covered(x, y)) continue;
      const Pixel p(x, y);
      const Point3 surface = novel.unproject(p, out.depth.at(x, y));
      feats.clear();
      dirs.clear();
      for (std::size_t n = 0; n < sources.size(); ++n) {
        const Reprojection r = reproject_point(surface, sources[n].camera, source_depth[n]);
        if (!is_visible(r, options.lambda)) continue;
        sample_bilinear(sources[n].features, r.pixel, {f.data(), static_cast<std::size_t>(channels)});
        feats.push_back(f);
        dirs.push_back(view_direction(sources[n].camera, surface, options.directions));
      }
      out.visible_views.at(x, y, 0) = static_cast<double>(feats.size());
      if (feats.empty()) continue;
      const auto fused = integrate_features(feats, dirs, view_direction(novel, surface, options.directions));
      if (!fused) continue;
      std::copy(fused->data(), fused->data() + channels, out.features.pixel(x, y).begin());
      out.holes.at(x, y) = 0;
    }
  };
  // Rows write disjoint pixels, so the split does not affect the result.
  const int threads = std::clamp(options.threads, 1, std::max(1, h));
  if (threads == 1) {
    for (int y = 0; y < h; ++y) row(y);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int y = t; y < h; y += threads) row(y);
      });
  }
  return out;
}

/// Turns a synthesized feature image into RGB.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual Image decode(const SynthesisOutput& synthesized) const = 0;
};

/// First three channels clamped to [0, 1]; holes take the background colour.
class IdentityDecoder final : public Decoder {
 public:
  explicit IdentityDecoder(const Vec3& background = Vec3::Zero()) : background_(background) {}

  Image decode(const SynthesisOutput& s) const override {
    if (s.features.channels() < 3)
      throw Error(ErrorCode::kConfiguration, "identity decoder needs at least 3 feature channels");
    const int w = s.features.width(), h = s.features.height();
    if (s.holes.width != w || s.holes.height != h) throw Error(ErrorCode::kShape, "hole mask does not match features");
    Image rgb(w, h, 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          rgb.at(x, y, c) = s.holes.at(x, y) ? background_[c] : std::clamp(s.features.at(x, y, c), 0.0, 1.0);
    return rgb;
  }

 private:
  Vec3 background_;
};

inline Image decode(const SynthesisOutput& s, const Decoder& decoder = IdentityDecoder()) {
  return decoder.decode(s);
}

}  // namespace hdhuman::ibr
