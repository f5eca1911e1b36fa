#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hdhuman/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace hdhuman;
using namespace hdhuman::metrics;

namespace {

Image noise_image(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, channels);
  for (double& v : img.data()) v = u(rng);
  return img;
}

// 2D window SSIM with every sum written out per window position.
double ssim_direct(const Image& a, const Image& b) {
  const int k = 11;
  double g[k][k], total = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) total += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 0.0001, c2 = 0.0009;
  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double sum = 0.0;
    int count = 0;
    for (int y = 0; y + k <= a.height(); ++y)
      for (int x = 0; x + k <= a.width(); ++x) {
        double mx = 0, my = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            mx += g[i][j] / total * a.at(x + j, y + i, c);
            my += g[i][j] / total * b.at(x + j, y + i, c);
          }
        double vx = 0, vy = 0, cov = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double dx = a.at(x + j, y + i, c) - mx, dy = b.at(x + j, y + i, c) - my;
            vx += g[i][j] / total * dx * dx;
            vy += g[i][j] / total * dy * dy;
            cov += g[i][j] / total * dx * dy;
          }
        sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    acc += sum / count;
  }
  return acc / a.channels();
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST(Sampling, PointsLieOnTheSurfaceAndAreSeeded) {
  const Mesh m = make_icosphere(3, 1.0);
  const auto a = sample_surface(m, 2000, 9), b = sample_surface(m, 2000, 9), c = sample_surface(m, 2000, 10);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (std::size_t i = 0; i < a.size(); i += 50) EXPECT_LT(oracle::point_mesh_distance(a[i], m), 1e-12);
}

TEST(Sampling, DensityFollowsArea) {
  // Two squares, the second four times larger.
  Mesh m = make_grid_patch(1, 1.0);
  const Mesh big = translated(make_grid_patch(1, 2.0), {5, 0, 0});
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.insert(m.vertices.end(), big.vertices.begin(), big.vertices.end());
  for (auto t : big.triangles) m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  const auto pts = sample_surface(m, 50000, 3);
  double big_share = 0.0;
  for (const auto& p : pts) big_share += p.x() > 4.0;
  EXPECT_NEAR(big_share / pts.size(), 0.8, 0.01);
}

TEST(P2s, IdenticalMeshesGiveZero) {
  const Mesh m = make_icosphere(3, 1.0);
  EXPECT_NEAR(p2s(m, m), 0.0, 1e-9);
  EXPECT_NEAR(chamfer(m, m), 0.0, 1e-9);
}

TEST(P2s, ParallelSquares) {
  const Mesh a = make_grid_patch(4, 1.0, 0.0), b = make_grid_patch(4, 1.0, 0.1);
  EXPECT_NEAR(p2s(a, b), 0.1, 1e-6);
  EXPECT_NEAR(chamfer(a, b), 0.1, 1e-6);
}

TEST(P2s, ConcentricSpheres) {
  const Mesh inner = make_icosphere(5, 1.0), outer = make_icosphere(5, 1.05);
  const double got = p2s(inner, outer);
  // Oracle: dense samples with a brute-force distance on a subset.
  const auto pts = sample_surface(inner, 200, 77);
  double sum = 0.0;
  for (const auto& p : pts) sum += oracle::point_mesh_distance(p, outer);
  EXPECT_NEAR(got, 0.05, 1e-3);
  EXPECT_NEAR(got, sum / pts.size(), 1e-3);
}

TEST(P2s, MatchesBruteForce) {
  const Mesh a = make_icosphere(2, 1.0), b = translated(make_icosphere(2, 0.8), {0.2, 0, 0.1});
  const auto pts = sample_surface(a, 500, 4);
  double sum = 0.0;
  for (const auto& p : pts) sum += oracle::point_mesh_distance(p, b);
  EXPECT_NEAR(p2s(a, b, 500, 4), sum / 500, 1e-12);
}

TEST(P2s, TranslationEquivariant) {
  const Mesh a = make_icosphere(3, 1.0), b = translated(make_icosphere(3, 0.7), {0.1, 0.2, 0});
  const Vec3 shift(3.0, -2.0, 7.5);
  EXPECT_NEAR(p2s(a, b, 5000), p2s(translated(a, shift), translated(b, shift), 5000), 1e-9);
}

TEST(Chamfer, SymmetricExactly) {
  const Mesh a = make_icosphere(3, 1.0), b = translated(make_icosphere(2, 0.6), {0.3, 0, 0});
  EXPECT_EQ(chamfer(a, b, 3000), chamfer(b, a, 3000));
  EXPECT_GT(chamfer(a, b, 3000), 0.0);
}

TEST(DistanceMetrics, EmptyMeshIsMetricError) {
  const Mesh m = make_icosphere(1, 1.0);
  EXPECT_EQ(code_of([&] { p2s(Mesh{}, m); }), ErrorCode::kMetric);
  EXPECT_EQ(code_of([&] { p2s(m, Mesh{}); }), ErrorCode::kMetric);
  EXPECT_EQ(code_of([&] { chamfer(m, Mesh{}); }), ErrorCode::kMetric);
}

TEST(Psnr, IdenticalIsInfinite) {
  const Image a = noise_image(16, 16, 3, 1);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, UniformOffsetIsTwentyDecibels) {
  const Image a(32, 32, 3, 0.6), b(32, 32, 3, 0.5);
  EXPECT_EQ(psnr(a, b), 20.0);
}

TEST(Psnr, MatchesDirectComputation) {
  const Image a = noise_image(40, 30, 3, 2), b = noise_image(40, 30, 3, 3);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) sum += std::pow(a.data()[i] - b.data()[i], 2);
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / (sum / a.data().size())), 1e-9);
}

TEST(Psnr, MaskRestrictsPixels) {
  Image a(4, 4, 1, 0.5), b(4, 4, 1, 0.5);
  b.at(0, 0, 0) = 0.0;  // outside the mask
  Mask m(4, 4, 1);
  m.at(0, 0) = 0;
  EXPECT_EQ(psnr(a, b, &m), std::numeric_limits<double>::infinity());
  EXPECT_LT(psnr(a, b), 100.0);
  EXPECT_EQ(code_of([&] { psnr(a, b, &(m = Mask(4, 4, 0))); }), ErrorCode::kMetric);
  EXPECT_EQ(code_of([&] { psnr(a, Image(3, 4, 1)); }), ErrorCode::kMetric);
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
  const Image ref(64, 64, 3, 0.5);
  const Image unit = noise_image(64, 64, 3, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Image noisy = ref;
    for (std::size_t i = 0; i < noisy.data().size(); ++i) noisy.data()[i] += amp * (unit.data()[i] - 0.5);
    const double v = psnr(noisy, ref);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Ssim, SelfComparisonIsOne) {
  const Image a = noise_image(48, 40, 3, 5);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
  const Image g = noise_image(20, 20, 1, 6);
  EXPECT_NEAR(ssim(g, g), 1.0, 1e-9);
}

TEST(Ssim, ConstantHalfAndItsNegative) {
  const Image a(16, 16, 3, 0.5);
  Image neg = a;
  for (double& v : neg.data()) v = 1.0 - v;
  EXPECT_NEAR(ssim(a, neg), 1.0, 1e-12);
}

TEST(Ssim, MatchesDirectWindowSums) {
  const Image a = noise_image(32, 28, 3, 7);
  Image b = a;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.1);
  for (double& v : b.data()) v = std::clamp(v + n(rng), 0.0, 1.0);
  const double want = ssim_direct(a, b);
  EXPECT_NEAR(ssim(a, b), want, 1e-6);
  EXPECT_GT(want, -1.0);
  EXPECT_LT(want, 1.0);
}

TEST(Ssim, BoundedOnAnticorrelatedImages) {
  const Image a = noise_image(24, 24, 1, 9);
  Image b = a;
  for (double& v : b.data()) v = 1.0 - v;
  const double s = ssim(a, b);
  EXPECT_GE(s, -1.0);
  EXPECT_LT(s, 0.0);
}

TEST(Ssim, Errors) {
  EXPECT_EQ(code_of([] { ssim(Image(10, 10, 1), Image(10, 10, 1)); }), ErrorCode::kMetric);
  EXPECT_EQ(code_of([] { ssim(Image(12, 12, 1), Image(12, 12, 3)); }), ErrorCode::kMetric);
  EXPECT_EQ(code_of([] { ssim(Image(12, 12, 2), Image(12, 12, 2)); }), ErrorCode::kMetric);
}

TEST(Report, JsonShape) {
  const Image a(16, 16, 3, 0.3);
  const json doc = report_json({psnr_report(a, a), ssim_report(a, a),
                                chamfer_report(make_grid_patch(2, 1.0), make_grid_patch(2, 1.0, 0.1), 1000, 5)});
  EXPECT_TRUE(doc.at("lpips").is_null());
  ASSERT_EQ(doc.at("metrics").size(), 3u);
  EXPECT_TRUE(doc["metrics"][0]["value"].is_null());
  EXPECT_TRUE(doc["metrics"][0]["infinite"].get<bool>());
  EXPECT_EQ(doc["metrics"][1]["parameters"]["window"], 11);
  EXPECT_EQ(doc["metrics"][2]["metric"], "chamfer");
  EXPECT_EQ(doc["metrics"][2]["units"], "m");
  EXPECT_EQ(doc["metrics"][2]["parameters"]["seed"], 5);
  EXPECT_NEAR(doc["metrics"][2]["value"].get<double>(), 0.1, 1e-6);
}
