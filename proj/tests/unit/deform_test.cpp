#include <gtest/gtest.h>

#include "hdhuman/tracking/deform.hpp"
#include "oracles.hpp"

using namespace hdhuman;
using namespace hdhuman::tracking;

namespace {

double offset_variance(const DeformationField& d) {
  Vec3 mean = Vec3::Zero();
  for (const auto& v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (const auto& v : d) var += (v - mean).squaredNorm();
  return var / static_cast<double>(d.size());
}

}  // namespace

TEST(Deform, IdenticalTargetGivesZeroOffsets) {
  const Mesh m = make_icosphere(3, 0.8);
  const DeformResult r = nonrigid_deform(m, m);
  for (const auto& d : r.delta) EXPECT_LT(d.norm(), 1e-8);
  EXPECT_EQ(r.mesh.triangles, m.triangles);
}

TEST(Deform, DefaultLambda) { EXPECT_EQ(DeformOptions{}.lambda, 100.0); }

TEST(Deform, LowFrequencyFieldRecovered) {
  // 1 m patch, 128 cells: the half-period cosine spans 256 edges per
  // wavelength, where the lambda = 100 smoothing attenuates it by ~16%.
  const Mesh refined = make_grid_patch(128, 1.0);
  Mesh recon = refined;
  for (auto& v : recon.vertices) v.z() += 0.01 * std::cos(M_PI * v.x());
  const DeformResult r = nonrigid_deform(refined, recon);
  const auto tree = spatial::AabbTree::over_triangles(recon);
  std::size_t close = 0;
  for (const auto& v : r.mesh.vertices) close += std::sqrt(tree.closest(v).squared_distance) < 2e-3;
  EXPECT_GE(static_cast<double>(close) / refined.vertices.size(), 0.95);
}

TEST(Deform, StiffLimitIsRigidTranslation) {
  const Mesh refined = make_icosphere(3, 0.6);
  const Mesh recon = translated(refined, Vec3(0.02, 0, 0));
  const DeformResult r = nonrigid_deform(refined, recon, {.lambda = 1e8});
  EXPECT_LT(offset_variance(r.delta), 1e-10);
  // With a rigid shift available the common translation is recovered.
  Vec3 mean = Vec3::Zero();
  for (const auto& d : r.delta) mean += d;
  mean /= static_cast<double>(r.delta.size());
  EXPECT_LT((mean - Vec3(0.02, 0, 0)).norm(), 1e-4);
}

TEST(Deform, VertexCorrespondenceMode) {
  const Mesh refined = make_icosphere(2, 0.6);
  const Mesh recon = translated(refined, Vec3(0, 0.003, 0));
  const DeformResult r = nonrigid_deform(refined, recon, {.correspondence = CorrespondenceMode::kVertex});
  EXPECT_LE(r.report.final_cost, r.report.initial_cost);
  for (std::size_t v = 0; v < refined.vertices.size(); ++v)
    EXPECT_LT((r.mesh.vertices[v] - recon.vertices[v]).norm(), 1e-3);
}

TEST(Deform, RejectsBadInput) {
  const Mesh m = make_icosphere(1);
  EXPECT_THROW(nonrigid_deform(m, m, {.lambda = 0.0}), Error);
  Mesh points = m;
  points.triangles.clear();
  EXPECT_THROW(nonrigid_deform(points, m), Error);
}
