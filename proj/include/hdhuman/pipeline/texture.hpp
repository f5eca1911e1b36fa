#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/mesh.hpp"

namespace hdhuman::pipeline {

enum class TexturePattern { kGradient, kChecker };

inline TexturePattern texture_from_string(const std::string& s) {
  if (s == "gradient") return TexturePattern::kGradient;
  if (s == "checker") return TexturePattern::kChecker;
  throw Error(ErrorCode::kConfiguration, "unknown texture pattern '" + s + "'");
}

/// Per-vertex "color" channel from the direction of each vertex about
/// `center`. The gradient is smooth; the checker has 8 cells around the
/// equator and is meant for visual inspection.
inline void apply_texture(Mesh& mesh, TexturePattern pattern, const Vec3& center = Vec3::Zero()) {
  std::vector<double> color;
  color.reserve(3 * mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    Vec3 d = v - center;
    if (d.norm() > 0.0) d.normalize();
    if (pattern == TexturePattern::kGradient) {
      color.insert(color.end(),
                   {0.5 + 0.4 * std::sin(3.0 * d.x()), 0.5 + 0.4 * d.y(), 0.5 + 0.35 * std::cos(2.0 * d.z())});
    } else {
      const int u = static_cast<int>(std::floor(4.0 * (std::atan2(d.z(), d.x()) / M_PI + 1.0)));
      const int w = static_cast<int>(std::floor(4.0 * (std::asin(std::clamp(d.y(), -1.0, 1.0)) / M_PI + 0.5)));
      const double c = (u + w) % 2 ? 0.85 : 0.15;
      color.insert(color.end(), {c, 0.5 * c + 0.2, 1.0 - c});
    }
  }
  mesh.set_attribute("color", 3, std::move(color));
}

}  // namespace hdhuman::pipeline
