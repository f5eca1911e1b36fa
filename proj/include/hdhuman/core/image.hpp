#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/geometry.hpp"

namespace hdhuman {

/// Row-major multi-channel raster of doubles; channels are interleaved.
/// RGB images use values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width < 0 || height < 0 || channels <= 0)
      throw Error(ErrorCode::kShape, "invalid image dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  double at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  std::span<double> pixel(int x, int y) { return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)}; }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  bool operator==(const Image& o) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// D-channel per-pixel features; same layout as an image.
using FeatureMap = Image;

/// Camera-space z per pixel; 0 marks "no surface".
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height)
      : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return values_.empty(); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool covered(int x, int y) const { return at(x, y) > 0.0; }

  bool operator==(const DepthMap& o) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Per-pixel boolean raster (1 = set).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1)); }

  bool operator==(const Mask& o) const = default;
};

/// Bilinear lookup at a continuous pixel position; positions outside the
/// image clamp to the border.
inline void sample_bilinear(const Image& img, const Pixel& p, std::span<double> out) {
  if (img.empty()) throw Error(ErrorCode::kShape, "sampling an empty image");
  const double x = std::clamp(p.x(), 0.0, static_cast<double>(img.width() - 1));
  const double y = std::clamp(p.y(), 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = (1.0 - fy) * top + fy * bottom;
  }
}

/// Pixels that are covered in `depth` and have an uncovered 8-neighbour (or
/// the reverse), dilated by `band - 1` further pixels.
inline Mask silhouette_band(const DepthMap& depth, int band = 1) {
  Mask edge(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      const bool c = depth.covered(x, y);
      for (int dy = -1; dy <= 1 && !edge.at(x, y); ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= depth.width() || ny >= depth.height()) continue;
          if (depth.covered(nx, ny) != c) {
            edge.at(x, y) = 1;
            break;
          }
        }
    }
  for (int pass = 1; pass < band; ++pass) {
    Mask grown = edge;
    for (int y = 0; y < depth.height(); ++y)
      for (int x = 0; x < depth.width(); ++x) {
        if (!edge.at(x, y)) continue;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx >= 0 && ny >= 0 && nx < depth.width() && ny < depth.height()) grown.at(nx, ny) = 1;
          }
      }
    edge = std::move(grown);
  }
  return edge;
}

}  // namespace hdhuman
