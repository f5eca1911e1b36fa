#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/error.hpp"
#include "hdhuman/core/image.hpp"

namespace hdhuman::recon {

/// Default depth normalisation constant.
inline const double kDefaultDepthLambda = 4.0 * std::sqrt(3.0);

/// Hip-relative camera depth of `point`, scaled by the hip-neck length.
/// Zero on the hip plane, negative in front of it; not clamped.
inline double normalize_depth(const Point3& point, const Camera& camera, const Point3& hip, const Point3& neck,
                              double lambda = kDefaultDepthLambda) {
  const double body = (hip - neck).norm();
  if (!(body > 0.0)) throw Error(ErrorCode::kDegenerateSkeleton, "hip and neck coincide");
  const double point_z = camera.depth_of(point);
  const double hip_z = camera.depth_of(hip);
  return (point_z - hip_z) / (lambda * body);
}

/// Bilinear feature at the projection of `point`; border-clamped.
inline Eigen::VectorXd sample_pixel_aligned(const FeatureMap& features, const Camera& camera, const Point3& point) {
  if (camera.depth_of(point) <= 0.0) throw Error(ErrorCode::kOutOfView, "query point is behind the camera");
  const Projection proj = camera.project(point);
  Eigen::VectorXd out(features.channels());
  sample_bilinear(features, proj.pixel, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

/// Turns an input photograph (plus optional normal map) into a feature map
/// at the same resolution. Stands in for a learned image encoder.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual FeatureMap encode(const Image& rgb, const Image* normals) const = 0;
  virtual int channels(int normal_channels) const = 0;
};

/// RGB passthrough, with normal-map channels appended when supplied.
class RgbFeatureProvider final : public FeatureProvider {
 public:
  FeatureMap encode(const Image& rgb, const Image* normals) const override {
    if (rgb.channels() != 3) throw Error(ErrorCode::kShape, "RGB provider needs a 3-channel image");
    if (!normals) return rgb;
    if (normals->width() != rgb.width() || normals->height() != rgb.height())
      throw Error(ErrorCode::kShape, "normal map resolution differs from image");
    FeatureMap out(rgb.width(), rgb.height(), 3 + normals->channels());
    for (int y = 0; y < rgb.height(); ++y)
      for (int x = 0; x < rgb.width(); ++x) {
        auto px = out.pixel(x, y);
        for (int c = 0; c < 3; ++c) px[c] = rgb.at(x, y, c);
        for (int c = 0; c < normals->channels(); ++c) px[3 + c] = normals->at(x, y, c);
      }
    return out;
  }
  int channels(int normal_channels) const override { return 3 + normal_channels; }
};

}  // namespace hdhuman::recon
