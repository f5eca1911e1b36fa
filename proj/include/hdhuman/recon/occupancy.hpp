#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/error.hpp"
#include "hdhuman/core/mesh.hpp"
#include "hdhuman/recon/features.hpp"
#include "hdhuman/recon/transformer.hpp"
#include "hdhuman/spatial/aabb_tree.hpp"

namespace hdhuman::recon {

/// Maps fused features (and the per-view normalised depths) to occupancy.
class OccupancyHead {
 public:
  virtual ~OccupancyHead() = default;
  virtual double evaluate(const Point3& point, const Vector& fused, const Vector& depths) const = 0;
};

using SignedDistance = std::function<double(const Point3&)>;

inline SignedDistance sphere_sdf(const Point3& center, double radius) {
  return [center, radius](const Point3& p) { return (p - center).norm() - radius; };
}

/// Signed distance to a closed mesh: exact unsigned distance from the BVH,
/// sign from the parity of ray crossings along a fixed skewed direction.
class MeshSdf {
 public:
  explicit MeshSdf(const Mesh& mesh) : tree_(spatial::AabbTree::over_triangles(mesh)) {}

  double operator()(const Point3& p) const {
    const double d = std::sqrt(tree_.closest(p).squared_distance);
    std::vector<double> hits;
    tree_.intersect_all(p, Vec3(0.5773, 0.5774, 0.5775).normalized(), 0.0, hits);
    return hits.size() % 2 == 1 ? -d : d;
  }

 private:
  spatial::AabbTree tree_;
};

/// Ignores features; occupancy = sigmoid(-sdf(point) / width), so the
/// surface sits exactly on the 0.5 level.
class OracleHead final : public OccupancyHead {
 public:
  explicit OracleHead(SignedDistance sdf, double width = 0.05) : sdf_(std::move(sdf)), width_(width) {
    if (!(width > 0.0)) throw Error(ErrorCode::kConfiguration, "oracle head width must be positive");
  }

  double evaluate(const Point3& point, const Vector&, const Vector&) const override {
    return occupancy(point);
  }

  double occupancy(const Point3& point) const { return 1.0 / (1.0 + std::exp(sdf_(point) / width_)); }

 private:
  SignedDistance sdf_;
  double width_;
};

/// Small perceptron on [fused ; mean depth]: tanh hidden layers, sigmoid out.
class MlpHead final : public OccupancyHead {
 public:
  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
  };

  explicit MlpHead(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty() || layers_.back().weight.rows() != 1)
      throw Error(ErrorCode::kConfiguration, "MLP head must end in a single output");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].bias.size() != layers_[i].weight.rows())
        throw Error(ErrorCode::kShape, "MLP bias size mismatch");
      if (i > 0 && layers_[i].weight.cols() != layers_[i - 1].weight.rows())
        throw Error(ErrorCode::kShape, "MLP layer sizes do not chain");
    }
  }

  static MlpHead random(int input_dim, std::span<const int> hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    int in = input_dim;
    std::vector<int> sizes(hidden.begin(), hidden.end());
    sizes.push_back(1);
    for (int out : sizes) {
      std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
      Layer l{Matrix(out, in), Vector(out)};
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) l.weight(r, c) = g(rng);
        l.bias(r) = 0.1 * g(rng);
      }
      layers.push_back(std::move(l));
      in = out;
    }
    return MlpHead(std::move(layers));
  }

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  const std::vector<Layer>& layers() const { return layers_; }

  double evaluate(const Point3&, const Vector& fused, const Vector& depths) const override {
    Vector x(fused.size() + 1);
    x.head(fused.size()) = fused;
    x(fused.size()) = depths.size() > 0 ? depths.mean() : 0.0;
    if (x.size() != input_dim()) throw Error(ErrorCode::kShape, "MLP head input width mismatch");
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
      x = (layers_[i].weight * x + layers_[i].bias).array().tanh().matrix();
    const double logit = (layers_.back().weight * x + layers_.back().bias)(0);
    return 1.0 / (1.0 + std::exp(-logit));
  }

 private:
  std::vector<Layer> layers_;
};

/// Where the normalised depth enters the pipeline.
enum class DepthFeatureMode {
  kAppendBeforeFusion,  // z_i is an extra column of each view row
  kHeadOnly,            // z only reaches the head
};

struct QueryOptions {
  double depth_lambda = kDefaultDepthLambda;
  DepthFeatureMode depth_mode = DepthFeatureMode::kAppendBeforeFusion;
};

struct ViewFeatures {
  const FeatureMap* features;
  const Camera* camera;
};

struct BodyAnchor {
  Point3 hip;
  Point3 neck;
};

/// Occupancy at one point: pixel-aligned sampling per view, normalised depth,
/// attention fusion, mean pooling, head.
inline double query_occupancy(const Point3& point, std::span<const ViewFeatures> views, const BodyAnchor& body,
                              const TransformerWeights& weights, const OccupancyHead& head,
                              const QueryOptions& options = {}) {
  if (views.empty()) throw Error(ErrorCode::kInsufficientViews, "query needs at least one view");
  const int feat = views.front().features->channels();
  const bool append = options.depth_mode == DepthFeatureMode::kAppendBeforeFusion;
  Matrix phi(static_cast<Eigen::Index>(views.size()), feat + (append ? 1 : 0));
  Vector depths(static_cast<Eigen::Index>(views.size()));
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].features->channels() != feat) throw Error(ErrorCode::kShape, "views disagree on feature width");
    const Vector f = sample_pixel_aligned(*views[i].features, *views[i].camera, point);
    const auto row = static_cast<Eigen::Index>(i);
    phi.row(row).head(feat) = f.transpose();
    depths(row) = normalize_depth(point, *views[i].camera, body.hip, body.neck, options.depth_lambda);
    if (append) phi(row, feat) = depths(row);
  }
  const Vector pooled = fuse_and_pool(transformer_fuse(phi, weights));
  return head.evaluate(point, pooled, depths);
}

/// Scalar samples on the corners of a uniform lattice, x fastest.
struct OccupancyField {
  std::array<int, 3> resolution{0, 0, 0};
  Aabb bounds;
  std::vector<double> values;

  OccupancyField() = default;
  OccupancyField(std::array<int, 3> res, const Aabb& box) : resolution(res), bounds(box) {
    for (int n : res)
      if (n < 2) throw Error(ErrorCode::kConfiguration, "field resolution must be >= 2 per axis");
    if (!((box.hi - box.lo).array() > 0.0).all())
      throw Error(ErrorCode::kConfiguration, "field bounds need positive extent on every axis");
    values.assign(static_cast<std::size_t>(res[0]) * res[1] * res[2], 0.0);
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution[1] + j) * resolution[0] + i;
  }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }

  Point3 corner(int i, int j, int k) const {
    const Vec3 ext = bounds.hi - bounds.lo;
    return bounds.lo + Vec3(ext.x() * i / (resolution[0] - 1), ext.y() * j / (resolution[1] - 1),
                            ext.z() * k / (resolution[2] - 1));
  }

  Vec3 spacing() const {
    const Vec3 ext = bounds.hi - bounds.lo;
    return {ext.x() / (resolution[0] - 1), ext.y() / (resolution[1] - 1), ext.z() / (resolution[2] - 1)};
  }
};

/// Evaluates `fn` on every lattice corner. Slabs of constant k are spread
/// over `threads` workers; each corner is written by exactly one worker.
template <class Fn>
OccupancyField sample_field(const Aabb& bounds, std::array<int, 3> resolution, Fn&& fn, int threads = 1) {
  OccupancyField field(resolution, bounds);
  const int nz = resolution[2];
  threads = std::clamp(threads, 1, nz);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](int worker) {
    try {
      for (int k = worker; k < nz; k += threads)
        for (int j = 0; j < resolution[1]; ++j)
          for (int i = 0; i < resolution[0]; ++i) field.at(i, j, k) = fn(field.corner(i, j, k));
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return field;
}

inline OccupancyField build_field(std::span<const ViewFeatures> views, const BodyAnchor& body,
                                  const TransformerWeights& weights, const OccupancyHead& head, const Aabb& bounds,
                                  std::array<int, 3> resolution, const QueryOptions& options = {},
                                  int threads = 1) {
  return sample_field(
      bounds, resolution,
      [&](const Point3& p) { return query_occupancy(p, views, body, weights, head, options); }, threads);
}

}  // namespace hdhuman::recon
