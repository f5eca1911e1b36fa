#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdhuman/core/image.hpp"
#include "hdhuman/core/mesh.hpp"
#include "hdhuman/spatial/aabb_tree.hpp"

namespace hdhuman::metrics {

using json = nlohmann::json;

inline constexpr int kDefaultSamples = 100000;
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Area-uniform points on the surface. Each sample draws its triangle by
/// area, then uniform barycentrics via the square-root warp.
inline std::vector<Point3> sample_surface(const Mesh& mesh, int samples, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw Error(ErrorCode::kMetric, "cannot sample a mesh without triangles");
  if (samples <= 0) throw Error(ErrorCode::kMetric, "sample count must be positive");
  std::vector<double> areas(mesh.triangles.size());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = triangle_area(mesh, t);
  if (!(surface_area(mesh) > 0.0)) throw Error(ErrorCode::kMetric, "mesh has zero surface area");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point3> pts(static_cast<std::size_t>(samples));
  for (auto& p : pts) {
    const std::size_t t = pick(rng);
    const double s = std::sqrt(u(rng)), r = u(rng);
    p = (1.0 - s) * mesh.corner(t, 0) + s * (1.0 - r) * mesh.corner(t, 1) + s * r * mesh.corner(t, 2);
  }
  return pts;
}

/// Mean distance from points sampled on `source` to the nearest triangle of
/// `target`.
inline double p2s(const Mesh& source, const Mesh& target, int samples = kDefaultSamples,
                  std::uint64_t seed = kDefaultSeed) {
  if (target.triangles.empty()) throw Error(ErrorCode::kMetric, "distance target has no triangles");
  const std::vector<Point3> pts = sample_surface(source, samples, seed);
  const spatial::AabbTree tree = spatial::AabbTree::over_triangles(target);
  double sum = 0.0;
  for (const auto& p : pts) sum += std::sqrt(tree.closest(p).squared_distance);
  return sum / static_cast<double>(pts.size());
}

/// Symmetric mean of the two one-sided distances, both with the same seed.
inline double chamfer(const Mesh& a, const Mesh& b, int samples = kDefaultSamples, std::uint64_t seed = kDefaultSeed) {
  return 0.5 * (p2s(a, b, samples, seed) + p2s(b, a, samples, seed));
}

/// Peak 1.0. Identical inputs give +infinity.
inline double psnr(const Image& a, const Image& b, const Mask* mask = nullptr) {
  if (!a.same_shape(b) || a.empty()) throw Error(ErrorCode::kMetric, "PSNR needs two non-empty images of equal shape");
  if (mask && (mask->width != a.width() || mask->height != a.height()))
    throw Error(ErrorCode::kMetric, "PSNR mask does not match the images");
  // Neumaier-compensated sum: uniform errors give their exact square back.
  double sum = 0.0, carry = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (mask && !mask->at(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        const double term = d * d, t = sum + term;
        carry += std::abs(sum) >= term ? (sum - t) + term : (term - t) + sum;
        sum = t;
      }
      n += static_cast<std::size_t>(a.channels());
    }
  if (n == 0) throw Error(ErrorCode::kMetric, "PSNR mask selects no pixels");
  const double mse = (sum + carry) / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

// Separable Gaussian filter over the "valid" region only.
inline std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> mid(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * img[static_cast<std::size_t>(y) * w + x + i];
      mid[static_cast<std::size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * mid[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace detail

/// Mean local SSIM over every full window position, averaged over channels.
inline double ssim(const Image& a, const Image& b, const SsimOptions& o = {}) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kMetric, "SSIM needs images of equal shape");
  if (a.channels() != 1 && a.channels() != 3) throw Error(ErrorCode::kMetric, "SSIM takes 1 or 3 channel images");
  if (a.width() < o.window || a.height() < o.window)
    throw Error(ErrorCode::kMetric, "image is smaller than the SSIM window");
  std::vector<double> g(static_cast<std::size_t>(o.window));
  double total = 0.0;
  for (int i = 0; i < o.window; ++i) {
    const double d = i - 0.5 * (o.window - 1);
    g[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  const double c1 = std::pow(o.k1 * o.dynamic_range, 2), c2 = std::pow(o.k2 * o.dynamic_range, 2);
  const int w = a.width(), h = a.height();
  const std::size_t n = a.pixel_count();
  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data()[i * a.channels() + c];
      y[i] = b.data()[i * a.channels() + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = detail::filter_valid(x, w, h, g), my = detail::filter_valid(y, w, h, g);
    const auto sxx = detail::filter_valid(xx, w, h, g), syy = detail::filter_valid(yy, w, h, g);
    const auto sxy = detail::filter_valid(xy, w, h, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    acc += sum / static_cast<double>(mx.size());
  }
  return acc / a.channels();
}

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::string units;
  json parameters = json::object();
};

/// Infinite values serialise as null plus `"infinite": true`; JSON has no
/// infinity literal.
inline json to_json(const MetricReport& r) {
  json j{{"metric", r.name}, {"units", r.units}, {"parameters", r.parameters}};
  if (std::isfinite(r.value)) {
    j["value"] = r.value;
  } else {
    j["value"] = nullptr;
    j["infinite"] = true;
  }
  return j;
}

/// Report document; the perceptual metric slot stays null.
inline json report_json(const std::vector<MetricReport>& reports) {
  json list = json::array();
  for (const auto& r : reports) list.push_back(to_json(r));
  return {{"metrics", std::move(list)}, {"lpips", nullptr}};
}

inline MetricReport chamfer_report(const Mesh& a, const Mesh& b, int samples = kDefaultSamples,
                                   std::uint64_t seed = kDefaultSeed) {
  return {"chamfer", chamfer(a, b, samples, seed), "m", {{"samples", samples}, {"seed", seed}}};
}

inline MetricReport p2s_report(const Mesh& source, const Mesh& target, int samples = kDefaultSamples,
                               std::uint64_t seed = kDefaultSeed) {
  return {"p2s", p2s(source, target, samples, seed), "m", {{"samples", samples}, {"seed", seed}}};
}

inline MetricReport psnr_report(const Image& a, const Image& b, const Mask* mask = nullptr) {
  return {"psnr", psnr(a, b, mask), "dB", {{"peak", 1.0}, {"masked", mask != nullptr}}};
}

inline MetricReport ssim_report(const Image& a, const Image& b, const SsimOptions& o = {}) {
  return {"ssim",
          ssim(a, b, o),
          "",
          {{"window", o.window}, {"sigma", o.sigma}, {"k1", o.k1}, {"k2", o.k2}, {"dynamic_range", o.dynamic_range}}};
}

}  // namespace hdhuman::metrics
