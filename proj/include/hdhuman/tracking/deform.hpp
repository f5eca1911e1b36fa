#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "hdhuman/tracking/correspondence.hpp"
#include "hdhuman/tracking/gauss_newton.hpp"
#include "hdhuman/tracking/refine.hpp"

namespace hdhuman::tracking {

inline constexpr double kDefaultDeformLambda = 100.0;

struct DeformOptions {
  double lambda = kDefaultDeformLambda;  // weight of the edge smoothness term
  CorrespondenceMode correspondence = CorrespondenceMode::kSurface;
  GaussNewtonOptions solver;
};

/// Per-vertex translations for one frame.
using DeformationField = std::vector<Vec3>;

struct DeformResult {
  DeformationField delta;
  Mesh mesh;  // refined mesh displaced by delta
  GaussNewtonResult report;
};

/// Non-rigid detail recovery: per-vertex offsets pulled onto the
/// reconstruction, with a squared edge-difference penalty keeping
/// neighbouring offsets alike.
inline DeformResult nonrigid_deform(const Mesh& refined, const Mesh& recon, const DeformOptions& options = {}) {
  if (!(options.lambda > 0.0)) throw Error(ErrorCode::kConfiguration, "deformation lambda must be positive");
  refined.validate();
  if (refined.triangles.empty()) throw Error(ErrorCode::kInvalidMesh, "deformation needs edge connectivity");
  const ClosestSurface target(recon, options.correspondence);
  const std::size_t nv = refined.vertices.size();
  const std::vector<Edge> edges = unique_edges(refined);
  const double w = std::sqrt(options.lambda);
  const Eigen::Index data_rows = static_cast<Eigen::Index>(3 * nv);
  const Eigen::Index rows = data_rows + static_cast<Eigen::Index>(3 * edges.size());

  auto displaced = [&](const Vector& x) {
    std::vector<Point3> pts(nv);
    for (std::size_t v = 0; v < nv; ++v) pts[v] = refined.vertices[v] + x.segment<3>(3 * v);
    return pts;
  };
  detail::MatchCache cache;
  auto residual = [&](const Vector& x) {
    const std::vector<Point3> pts = displaced(x);
    const auto& m = cache.at(x, target, [&](const Vector&) { return pts; });
    Vector r(rows);
    for (std::size_t v = 0; v < nv; ++v) r.segment<3>(3 * v) = pts[v] - m[v].point;
    for (std::size_t e = 0; e < edges.size(); ++e)
      r.segment<3>(data_rows + 3 * e) = w * (x.segment<3>(3 * edges[e].first) - x.segment<3>(3 * edges[e].second));
    return r;
  };
  auto jacobian = [&](const Vector& x) {
    const auto& m = cache.at(x, target, displaced);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(9 * nv + 6 * edges.size());
    for (std::size_t v = 0; v < nv; ++v)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          if (m[v].residual_jacobian(r, c) != 0.0)
            entries.emplace_back(static_cast<int>(3 * v + r), static_cast<int>(3 * v + c), m[v].residual_jacobian(r, c));
    for (std::size_t e = 0; e < edges.size(); ++e)
      for (int k = 0; k < 3; ++k) {
        const int row = static_cast<int>(data_rows + 3 * e + k);
        entries.emplace_back(row, static_cast<int>(3 * edges[e].first + k), w);
        entries.emplace_back(row, static_cast<int>(3 * edges[e].second + k), -w);
      }
    SparseJacobian jac(rows, data_rows);
    jac.setFromTriplets(entries.begin(), entries.end());
    return jac;
  };

  DeformResult out;
  out.report = gauss_newton(residual, jacobian, Vector::Zero(data_rows), options.solver);
  out.delta.resize(nv);
  out.mesh = refined;
  for (std::size_t v = 0; v < nv; ++v) {
    out.delta[v] = out.report.x.segment<3>(3 * v);
    out.mesh.vertices[v] = refined.vertices[v] + out.delta[v];
  }
  return out;
}

}  // namespace hdhuman::tracking
