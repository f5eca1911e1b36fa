#include <random>

#include <gtest/gtest.h>

#include "hdhuman/recon/occupancy.hpp"
#include "oracles.hpp"

using namespace hdhuman;
using namespace hdhuman::recon;

namespace {

struct Rig {
  std::vector<Camera> cameras;
  std::vector<FeatureMap> maps;
  std::vector<ViewFeatures> views;
};

Rig make_rig(int n) {
  Rig rig;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    rig.cameras.push_back(ring_camera(i, n, 3.0, 0.0, 60.0, 32, 32));
    FeatureMap m(32, 32, 3);
    for (double& v : m.data()) v = u(rng);
    rig.maps.push_back(m);
  }
  for (int i = 0; i < n; ++i) rig.views.push_back({&rig.maps[i], &rig.cameras[i]});
  return rig;
}

const BodyAnchor kBody{{0, -0.5, 0}, {0, 0.5, 0}};

// Straight-line evaluation of the MLP head on [pooled ; mean z].
double mlp_reference(const MlpHead& head, const Vector& pooled, const Vector& z) {
  std::vector<double> x(pooled.data(), pooled.data() + pooled.size());
  double zs = 0.0;
  for (int i = 0; i < z.size(); ++i) zs += z(i);
  x.push_back(zs / z.size());
  const auto& layers = head.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> y(layers[l].weight.rows());
    for (int r = 0; r < layers[l].weight.rows(); ++r) {
      double s = layers[l].bias(r);
      for (int c = 0; c < layers[l].weight.cols(); ++c) s += layers[l].weight(r, c) * x[c];
      y[r] = l + 1 < layers.size() ? std::tanh(s) : 1.0 / (1.0 + std::exp(-s));
    }
    x = y;
  }
  return x[0];
}

}  // namespace

TEST(Occupancy, OracleHeadInsideOutsideAndLevelSet) {
  const Rig rig = make_rig(3);
  const auto w = TransformerWeights::random(4, 8, 1);
  const OracleHead head(sphere_sdf(Vec3::Zero(), 1.0));
  EXPECT_GT(query_occupancy({0, 0, 0}, rig.views, kBody, w, head), 0.5);
  EXPECT_LT(query_occupancy({0, 0, 2}, rig.views, kBody, w, head), 0.5);
  for (const Vec3 d : {Vec3(1, 0, 0), Vec3(0.6, 0.8, 0), Vec3(1, 1, 1).normalized()})
    EXPECT_NEAR(query_occupancy(d, rig.views, kBody, w, head), 0.5, 1e-6);
}

TEST(Occupancy, MlpHeadMatchesStraightLine) {
  const Rig rig = make_rig(4);
  const auto w = TransformerWeights::random(4, 6, 2);
  const std::vector<int> hidden{8, 5};
  const MlpHead head = MlpHead::random(7, hidden, 3);
  for (const Point3 p : {Point3(0.1, 0.2, 0.3), Point3(-0.4, 0.0, 0.2), Point3(0.0, 0.9, -0.5)}) {
    // Build Phi by hand and run the reference head on its pooled fusion.
    Matrix phi(4, 4);
    Vector z(4);
    for (int i = 0; i < 4; ++i) {
      phi.row(i).head(3) = sample_pixel_aligned(rig.maps[i], rig.cameras[i], p).transpose();
      z(i) = normalize_depth(p, rig.cameras[i], kBody.hip, kBody.neck);
      phi(i, 3) = z(i);
    }
    const Vector pooled = fuse_and_pool(oracle::attention(phi, w.query, w.key, w.value));
    EXPECT_NEAR(query_occupancy(p, rig.views, kBody, w, head), mlp_reference(head, pooled, z), 1e-12);
  }
}

TEST(Occupancy, HeadOnlyDepthMode) {
  const Rig rig = make_rig(2);
  const auto w = TransformerWeights::random(3, 4, 5);
  const OracleHead head(sphere_sdf(Vec3::Zero(), 1.0));
  const QueryOptions opts{.depth_mode = DepthFeatureMode::kHeadOnly};
  EXPECT_GT(query_occupancy({0, 0, 0}, rig.views, kBody, w, head, opts), 0.5);
  // The default mode expects the extra depth column.
  EXPECT_THROW(query_occupancy({0, 0, 0}, rig.views, kBody, w, head), Error);
}

TEST(Occupancy, MeshSdfSign) {
  const MeshSdf sdf(make_icosphere(3, 1.0));
  EXPECT_LT(sdf({0.1, 0.2, 0.0}), 0.0);
  EXPECT_GT(sdf({0.0, 0.0, 1.5}), 0.0);
  EXPECT_NEAR(sdf({0.0, 0.0, 1.5}), 0.5, 1e-12);
}

TEST(Occupancy, BuildFieldMatchesDirectQueries) {
  const Rig rig = make_rig(3);
  const auto w = TransformerWeights::random(4, 8, 7);
  const OracleHead head(sphere_sdf(Vec3::Zero(), 1.0));
  const Aabb box{Vec3::Constant(-1.5), Vec3::Constant(1.5)};
  const OccupancyField field = build_field(rig.views, kBody, w, head, box, {32, 32, 32}, {}, 2);
  std::mt19937_64 rng(1);
  for (int s = 0; s < 300; ++s) {
    const int i = rng() % 32, j = rng() % 32, k = rng() % 32;
    EXPECT_EQ(field.at(i, j, k), query_occupancy(field.corner(i, j, k), rig.views, kBody, w, head));
  }
  EXPECT_EQ(field.corner(0, 0, 0), box.lo);
  EXPECT_EQ(field.corner(31, 31, 31), box.hi);
}

TEST(Occupancy, SphereFieldVolumeFraction) {
  const OracleHead head(sphere_sdf(Vec3::Zero(), 1.0));
  const Aabb box{Vec3::Constant(-1.5), Vec3::Constant(1.5)};
  const OccupancyField field = sample_field(box, {64, 64, 64}, [&](const Point3& p) { return head.occupancy(p); });
  std::size_t inside = 0;
  for (double v : field.values) inside += v > 0.5;
  const double fraction = static_cast<double>(inside) / field.values.size();
  const double ratio = 4.0 * M_PI / 3.0 / 27.0;
  EXPECT_NEAR(fraction, ratio, 0.02);
}

TEST(Occupancy, FieldValidation) {
  const Aabb box{Vec3::Zero(), Vec3::Ones()};
  EXPECT_THROW(OccupancyField({1, 4, 4}, box), Error);
  EXPECT_THROW(OccupancyField({4, 4, 4}, Aabb{Vec3::Zero(), Vec3(1, 0, 1)}), Error);
}

TEST(Occupancy, ThreadCountDoesNotChangeField) {
  const OracleHead head(sphere_sdf(Vec3(0.1, 0, 0), 0.7));
  const Aabb box{Vec3::Constant(-1), Vec3::Constant(1)};
  auto fn = [&](const Point3& p) { return head.occupancy(p); };
  EXPECT_EQ(sample_field(box, {20, 21, 22}, fn, 1).values, sample_field(box, {20, 21, 22}, fn, 3).values);
}
