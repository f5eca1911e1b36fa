#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/image.hpp"
#include "hdhuman/core/mesh.hpp"

namespace hdhuman::raster {

/// Per-pixel result of the visibility pass: winning triangle and its
/// perspective-correct barycentric weights over the original corners.
struct Fragments {
  DepthMap depth;
  std::vector<std::int64_t> triangle;  // -1 where uncovered
  std::vector<Vec3> weights;
};

struct AttributeImage {
  Image values;
  Mask mask;
};

/// Camera-space clip distance: geometry closer than this is cut away.
inline constexpr double kNearPlane = 1e-6;

namespace detail {

struct ClipVertex {
  Vec3 cam;     // camera-space position
  Vec3 bary;    // weights over the source triangle corners
};

// Sutherland-Hodgman against z = near; returns up to 4 vertices.
inline int clip_near(const std::array<ClipVertex, 3>& in, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= kNearPlane;
    const bool b_in = b.cam.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      out[n++] = {a.cam + s * (b.cam - a.cam), a.bary + s * (b.bary - a.bary)};
    }
  }
  return n;
}

inline double edge_fn(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Top-left fill rule with interior on the positive side of edge_fn.
inline bool owns_edge(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x(), dy = b.y() - a.y();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

inline void raster_triangle(const Camera& cam, const std::array<ClipVertex, 3>& v, std::int64_t tri_id,
                            Fragments& frags) {
  std::array<Vec2, 3> s;
  std::array<double, 3> inv_z;
  const Mat3& k = cam.intrinsics();
  for (int i = 0; i < 3; ++i) {
    const Vec3 h = k * v[i].cam;
    s[i] = Vec2(h.x() / h.z(), h.y() / h.z());
    inv_z[i] = 1.0 / v[i].cam.z();
  }
  std::array<int, 3> order{0, 1, 2};
  double area = edge_fn(s[0], s[1], s[2].x(), s[2].y());
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(order[1], order[2]);
    area = -area;
  }
  const Vec2& a = s[order[0]];
  const Vec2& b = s[order[1]];
  const Vec2& c = s[order[2]];
  const bool own_bc = owns_edge(b, c), own_ca = owns_edge(c, a), own_ab = owns_edge(a, b);

  const int w = frags.depth.width(), h = frags.depth.height();
  const int x_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
  const int x_hi = std::min(w - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
  const int y_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
  const int y_hi = std::min(h - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));

  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double e0 = edge_fn(b, c, x, y);
      const double e1 = edge_fn(c, a, x, y);
      const double e2 = edge_fn(a, b, x, y);
      if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
      if ((e0 == 0.0 && !own_bc) || (e1 == 0.0 && !own_ca) || (e2 == 0.0 && !own_ab)) continue;
      // Screen-space barycentrics in the original corner order.
      std::array<double, 3> l{};
      l[order[0]] = e0 / area;
      l[order[1]] = e1 / area;
      l[order[2]] = e2 / area;
      const double denom = l[0] * inv_z[0] + l[1] * inv_z[1] + l[2] * inv_z[2];
      const double z = 1.0 / denom;
      if (!(z > 0.0)) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      double& stored = frags.depth.values()[idx];
      if (stored != 0.0 && !(z < stored)) continue;  // ties keep the lower triangle index
      stored = z;
      frags.triangle[idx] = tri_id;
      Vec3 bary = Vec3::Zero();
      for (int i = 0; i < 3; ++i) bary += (l[i] * inv_z[i] * z) * v[i].bary;
      frags.weights[idx] = bary;
    }
  }
}

}  // namespace detail

/// Z-buffer visibility over pixel centers. No back-face culling; exact depth
/// ties resolve to the lowest triangle index.
inline Fragments rasterize(const Mesh& mesh, const Camera& cam) {
  Fragments f;
  f.depth = DepthMap(cam.width(), cam.height());
  f.triangle.assign(f.depth.values().size(), -1);
  f.weights.assign(f.depth.values().size(), Vec3::Zero());
  const std::array<Vec3, 3> unit{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    std::array<detail::ClipVertex, 3> v;
    int behind = 0;
    for (int i = 0; i < 3; ++i) {
      v[i] = {cam.to_camera(mesh.corner(t, i)), unit[i]};
      if (v[i].cam.z() < kNearPlane) ++behind;
    }
    if (behind == 3) continue;
    const auto id = static_cast<std::int64_t>(t);
    if (behind == 0) {
      detail::raster_triangle(cam, v, id, f);
      continue;
    }
    std::array<detail::ClipVertex, 4> poly;
    const int n = detail::clip_near(v, poly);
    for (int i = 1; i + 1 < n; ++i) detail::raster_triangle(cam, {poly[0], poly[i], poly[i + 1]}, id, f);
  }
  return f;
}

inline DepthMap render_depth(const Mesh& mesh, const Camera& cam) { return rasterize(mesh, cam).depth; }

/// Perspective-correct interpolation of a per-vertex channel from the
/// z-buffer winning triangle. Uncovered pixels hold zeros with mask 0.
inline AttributeImage resolve_attributes(const Mesh& mesh, const Fragments& frags, const std::string& channel) {
  auto it = mesh.attributes.find(channel);
  if (it == mesh.attributes.end())
    throw Error(ErrorCode::kConfiguration, "mesh has no vertex channel '" + channel + "'");
  const VertexAttribute& attr = it->second;
  const int w = frags.depth.width(), h = frags.depth.height();
  AttributeImage out{Image(w, h, attr.channels), Mask(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const std::int64_t t = frags.triangle[idx];
      if (t < 0) continue;
      out.mask.values[idx] = 1;
      const Vec3& b = frags.weights[idx];
      const Triangle& tri = mesh.triangles[static_cast<std::size_t>(t)];
      auto px = out.values.pixel(x, y);
      // Difference form keeps constant channels exact.
      for (int c = 0; c < attr.channels; ++c) {
        const double a0 = attr.at(tri[0])[c];
        px[c] = a0 + b[1] * (attr.at(tri[1])[c] - a0) + b[2] * (attr.at(tri[2])[c] - a0);
      }
    }
  return out;
}

inline AttributeImage render_attributes(const Mesh& mesh, const Camera& cam, const std::string& channel) {
  if (!mesh.has_attribute(channel))
    throw Error(ErrorCode::kConfiguration, "mesh has no vertex channel '" + channel + "'");
  return resolve_attributes(mesh, rasterize(mesh, cam), channel);
}

}  // namespace hdhuman::raster
