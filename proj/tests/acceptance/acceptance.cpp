// Acceptance run: one PASS/FAIL line per criterion at its stated tolerance.
// Exit status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "hdhuman/ibr/synthesis.hpp"
#include "hdhuman/metrics/metrics.hpp"
#include "hdhuman/pipeline/config.hpp"
#include "hdhuman/pipeline/scene.hpp"
#include "hdhuman/raster/rasterizer.hpp"
#include "hdhuman/recon/marching_cubes.hpp"
#include "hdhuman/recon/reconstruct.hpp"
#include "hdhuman/recon/transformer.hpp"
#include "hdhuman/tracking/deform.hpp"
#include "hdhuman/tracking/gauss_newton.hpp"
#include "hdhuman/tracking/ik.hpp"
#include "hdhuman/tracking/sequence.hpp"
#include "oracles.hpp"

using namespace hdhuman;
using Clock = std::chrono::steady_clock;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %-44s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix seeded(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

// ---- transformer fusion ------------------------------------------------------

double worst_gradient_error(int n, int d, int dk, std::uint64_t seed) {
  using recon::TransformerWeights;
  const Matrix phi = seeded(n, d, seed);
  const TransformerWeights w = TransformerWeights::random(d, dk, seed + 1);
  const Matrix up = seeded(n, dk, seed + 2);
  auto loss = [&](const Matrix& p, const TransformerWeights& ww) {
    return (recon::transformer_fuse(p, ww).array() * up.array()).sum();
  };
  const recon::FusionGradients g = recon::transformer_fuse_grad(phi, w, up);
  double worst = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c)
      worst = std::max(worst, oracle::gradient_error(g.phi(r, c), oracle::central_difference(phi, r, c, [&](const Matrix& m) {
                                                       return loss(m, w);
                                                     })));
  auto check = [&](const Matrix& analytic, Matrix TransformerWeights::*member) {
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < dk; ++c) {
        const double fd = oracle::central_difference(w.*member, r, c, [&](const Matrix& m) {
          TransformerWeights p = w;
          p.*member = m;
          return loss(phi, p);
        });
        worst = std::max(worst, oracle::gradient_error(analytic(r, c), fd));
      }
  };
  check(g.query, &TransformerWeights::query);
  check(g.key, &TransformerWeights::key);
  check(g.value, &TransformerWeights::value);
  return worst;
}

void fusion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4), d = 1 + static_cast<int>(rng() % 8),
              dk = 1 + static_cast<int>(rng() % 4);
    worst = std::max(worst, worst_gradient_error(n, d, dk, 5000 + trial));
  }
  const double secs = since(t0);
  report("fusion gradients vs central differences", worst < 1e-5 && secs < 10.0,
         fmt("100 shapes, worst rel err %.2e (< 1e-5), %.2f s (< 10 s)", worst, secs));
}

void fusion_oracle() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6), d = 1 + static_cast<int>(rng() % 12),
              dk = 1 + static_cast<int>(rng() % 8);
    const Matrix phi = seeded(n, d, 10000 + trial);
    const auto w = recon::TransformerWeights::random(d, dk, 20000 + trial);
    const Matrix ref = oracle::attention(phi, w.query, w.key, w.value);
    worst = std::max(worst, (recon::transformer_fuse(phi, w) - ref).cwiseAbs().maxCoeff());
  }
  report("fusion matches dense recomputation", worst < 1e-12, fmt("1000 cases, max abs diff %.2e (< 1e-12)", worst));

  std::size_t perms = 0, mismatched = 0;
  for (int n = 1; n <= 4; ++n)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix phi = seeded(n, 6, 300 + seed);
      const auto w = recon::TransformerWeights::random(6, 4, 400 + seed);
      const Matrix base = recon::transformer_fuse(phi, w);
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        Matrix p(n, 6);
        for (int i = 0; i < n; ++i) p.row(i) = phi.row(perm[i]);
        const Matrix out = recon::transformer_fuse(p, w);
        for (int i = 0; i < n; ++i) mismatched += !(out.row(i) == base.row(perm[i]));
        ++perms;
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  report("fusion permutation equivariance (exact)", mismatched == 0,
         fmt("%zu permutations for N <= 4, %zu rows differ bitwise", perms, mismatched));
}

// ---- image-based rendering --------------------------------------------------

constexpr int kRes = 256;

Camera ring(double index) {
  const double yaw = 2.0 * M_PI * index / 6.0;
  return Camera::look_at(3.0 * Vec3(std::sin(yaw), 0.0, std::cos(yaw)), Vec3::Zero(), Vec3::UnitY(), 280.0, kRes, kRes);
}

Mesh textured_sphere() {
  Mesh m = make_icosphere(4, 1.0);
  pipeline::apply_texture(m, pipeline::TexturePattern::kGradient);
  return m;
}

double psnr_uncovered_excluded(const Image& a, const Image& b, const Mask& holes) {
  Mask keep = holes;
  for (auto& v : keep.values) v = !v;
  return metrics::psnr(a, b, &keep);
}

void visibility_soundness() {
  const auto t0 = Clock::now();
  const Mesh m = textured_sphere();
  std::vector<Camera> cams;
  std::vector<DepthMap> depth;
  std::vector<Mask> bands;
  for (int i = 0; i < 6; ++i) {
    cams.push_back(ring(i));
    depth.push_back(raster::render_depth(m, cams.back()));
    bands.push_back(silhouette_band(depth.back(), 1));
  }
  const Camera novel = ring(0.5);
  const DepthMap dn = raster::render_depth(m, novel);
  const Mask band = silhouette_band(dn, 1);
  std::size_t pairs = 0, agree = 0;
  for (int y = 0; y < kRes; ++y)
    for (int x = 0; x < kRes; ++x) {
      if (!dn.covered(x, y) || band.at(x, y)) continue;
      const Point3 p = novel.unproject(Pixel(x, y), dn.at(x, y));
      for (std::size_t n = 0; n < cams.size(); ++n) {
        const ibr::Reprojection r = ibr::reproject_point(p, cams[n], depth[n]);
        // The band exemption applies at both ends of the pair.
        if (r.in_view &&
            bands[n].at(static_cast<int>(std::lround(r.pixel.x())), static_cast<int>(std::lround(r.pixel.y()))))
          continue;
        const bool truth = cams[n].depth_of(p) > 0.0 && cams[n].in_image(cams[n].project(p).pixel) &&
                           !oracle::occluded(m, p, cams[n].center());
        ++pairs;
        agree += ibr::is_visible(r) == truth;
      }
    }
  const double rate = static_cast<double>(agree) / static_cast<double>(pairs), secs = since(t0);
  report("visibility vs ray-mesh occlusion", rate >= 0.999 && secs < 60.0,
         fmt("%.4f%% of %zu pairs (>= 99.9%%), %.1f s (< 60 s)", 100.0 * rate, pairs, secs));
}

void ibr_round_trip() {
  const Mesh m = textured_sphere();
  std::vector<ibr::SourceView> all;
  for (int i = 0; i < 6; ++i) all.push_back({ring(i), raster::render_attributes(m, ring(i), "color").values, {}});
  double worst = std::numeric_limits<double>::infinity();
  for (int held = 0; held < 6; ++held) {
    std::vector<ibr::SourceView> five;
    for (int i = 0; i < 6; ++i)
      if (i != held) five.push_back(all[i]);
    const ibr::SynthesisOutput s = ibr::synthesize_view(five, m, all[held].camera);
    worst = std::min(worst, psnr_uncovered_excluded(ibr::decode(s), all[held].features, s.holes));
  }
  report("IBR leave-one-out (5 sources -> held-out)", worst > 30.0,
         fmt("worst of 6 held-out cameras %.2f dB (> 30 dB)", worst));

  const ibr::SynthesisOutput self = ibr::synthesize_view(all, m, all[0].camera);
  const double p = psnr_uncovered_excluded(ibr::decode(self), all[0].features, self.holes);
  report("IBR novel camera = source camera", p > 40.0, fmt("%.2f dB (> 40 dB)", p));
}

// ---- reconstruction ------------------------------------------------------------

void reconstruction_oracle() {
  pipeline::PipelineConfig config;
  const pipeline::Scene scene = pipeline::generate_scene(config);
  const pipeline::SceneFrame& f = scene.frames[0];
  const recon::ReconstructInput input{f.images, scene.calibration.cameras, f.skeletons, &scene.calibration.layout, {}};
  const auto w = recon::TransformerWeights::random(4, 64, config.seed);
  const recon::OracleHead head(recon::sphere_sdf(Vec3::Zero(), 1.0));
  const Aabb box{Vec3::Constant(-1.5), Vec3::Constant(1.5)};
  const recon::Reconstruction r = recon::reconstruct(input, recon::RgbFeatureProvider{}, w, head, box, {64, 64, 64});
  const double chamfer = oracle::sphere_chamfer(r.mesh, Vec3::Zero(), 1.0, 4000, 11);
  report("oracle reconstruction Chamfer, 6 views 64^3", chamfer < 0.0235,
         fmt("%.5f vs analytic sphere (< 0.0235)", chamfer));

  // Random blob unions keep the surface inside the box.
  int closed = 0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<Vec3, double>> blobs;
    for (int b = 0; b < 4; ++b) blobs.push_back({0.6 * Vec3(u(rng), u(rng), u(rng)), 0.35 + 0.15 * u(rng)});
    const double fa = 5 + 4 * std::abs(u(rng)), fb = 5 + 4 * std::abs(u(rng));
    const recon::OccupancyField field = recon::sample_field(box, {33, 37, 35}, [&](const Point3& p) {
      double sdf = 1e9;
      for (const auto& [c, rad] : blobs) sdf = std::min(sdf, (p - c).norm() - rad);
      sdf += 0.04 * std::sin(fa * p.y()) * std::cos(fb * p.z());
      return 1.0 / (1.0 + std::exp(sdf / 0.05));
    });
    closed += is_watertight(recon::extract_surface(field));
  }
  const bool recon_closed = is_watertight(r.mesh);
  report("extract_surface watertight", recon_closed && closed == 20,
         fmt("reconstruction %s, %d of 20 random fields closed", recon_closed ? "closed" : "open", closed));
}

// ---- tracking -----------------------------------------------------------------

void tracking_round_trip() {
  using namespace tracking;
  const KinematicTree tree = fixture::chain_tree();
  const Mesh canonical = fixture::chain_tube();
  const SkinningWeights weights = rig(canonical, tree);
  std::mt19937_64 rng(7);
  std::vector<Mesh> frames;
  std::vector<Skeleton3D> skeletons;
  for (int f = 0; f < 3; ++f) {
    const KinematicParams p = f == 0 ? KinematicParams::zero(4) : fixture::random_pose(4, rng, 0.4, 0.2);
    frames.push_back(lbs_deform(canonical, weights, tree, p));
    skeletons.push_back(forward_kinematics(tree, p));
  }
  const TrackingResult r = track_sequence(0, frames, skeletons, tree.parents());
  double worst = 0.0;
  bool fallback = false;
  for (std::size_t f = 0; f < 3; ++f) {
    fallback |= r.frames[f].fallback;
    for (std::size_t v = 0; v < frames[f].vertices.size(); ++v)
      worst = std::max(worst, (r.frames[f].mesh.vertices[v] - frames[f].vertices[v]).norm());
  }
  report("tracking 3-frame LBS round trip", worst < 1e-3 && !fallback,
         fmt("max vertex error %.2e m (< 1e-3)%s", worst, fallback ? ", fallback used" : ""));

  double ik_worst = 0.0;
  std::mt19937_64 ik_rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Skeleton3D target = forward_kinematics(tree, fixture::random_pose(4, ik_rng, M_PI / 3, 0.2));
    const Skeleton3D got = forward_kinematics(tree, solve_ik(tree, target).params);
    for (std::size_t j = 0; j < target.size(); ++j) ik_worst = std::max(ik_worst, (got[j] - target[j]).norm());
  }
  report("IK joint error on noiseless targets", ik_worst < 1e-6, fmt("50 poses, worst %.2e m (< 1e-6)", ik_worst));

  const Mesh refined = make_icosphere(3, 0.6);
  DeformOptions stiff;
  stiff.lambda = 1e8;
  const DeformResult d = nonrigid_deform(refined, translated(refined, Vec3(0.02, 0, 0)), stiff);
  Vec3 mean = Vec3::Zero();
  for (const auto& v : d.delta) mean += v;
  mean /= static_cast<double>(d.delta.size());
  double var = 0.0;
  for (const auto& v : d.delta) var += (v - mean).squaredNorm();
  var /= static_cast<double>(d.delta.size());
  report("nonrigid stiff limit offset variance", var < 1e-10, fmt("lambda 1e8, variance %.2e m^2 (< 1e-10)", var));
}

// ---- solver -------------------------------------------------------------------

void solver_sanity() {
  using namespace tracking;
  double worst = 0.0;
  int iters = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = seeded(10, 3, 10 + seed);
    const Vector b = seeded(10, 1, 50 + seed);
    const Vector want = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    GaussNewtonOptions opts;
    opts.max_iterations = 2;
    const auto res = gauss_newton([&](const Vector& x) { return Vector(a * x - b); }, [&](const Vector&) { return a; },
                                  Vector::Zero(3), opts);
    worst = std::max(worst, (res.x - want).norm());
    iters = std::max(iters, res.iterations);
  }
  report("Gauss-Newton linear least squares", worst < 1e-10 && iters <= 2,
         fmt("20 systems, error %.2e (< 1e-10) in <= %d iterations", worst, iters));

  auto r = [](const Vector& x) {
    Vector out(2);
    out << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return out;
  };
  auto j = [](const Vector& x) {
    Matrix out(2, 2);
    out << -20.0 * x(0), 10.0, -1.0, 0.0;
    return out;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto res = gauss_newton(r, j, x0);
  const double err = (res.x - Vector::Ones(2)).cwiseAbs().maxCoeff();
  report("Gauss-Newton Rosenbrock", err < 1e-6 && res.iterations <= 50,
         fmt("error %.2e (< 1e-6) after %d iterations (<= 50)", err, res.iterations));
}

// ---- metrics and constants -----------------------------------------------------------

void metrics_calibration() {
  const double p = metrics::psnr(Image(32, 32, 3, 0.6), Image(32, 32, 3, 0.5));
  report("PSNR uniform 0.1 error", p == 20.0, fmt("%.17g dB (exactly 20)", p));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(48, 40, 3);
  for (double& v : img.data()) v = u(rng);
  const double s = metrics::ssim(img, img);
  report("SSIM self comparison", std::abs(s - 1.0) <= 1e-9, fmt("%.12f (1 +- 1e-9)", s));

  const double c = metrics::chamfer(make_grid_patch(4, 1.0, 0.0), make_grid_patch(4, 1.0, 0.1));
  report("Chamfer parallel squares", std::abs(c - 0.1) <= 1e-6, fmt("%.9f (0.1 +- 1e-6)", c));
}

void constants() {
  const pipeline::PipelineConfig c;
  const bool depth = c.recon.depth_lambda == 4.0 * std::sqrt(3.0) && recon::QueryOptions{}.depth_lambda == c.recon.depth_lambda;
  const bool vis = c.render.lambda == 0.01 && ibr::SynthesisOptions{}.lambda == 0.01;
  const bool reg = c.track.lambda == 100.0 && tracking::DeformOptions{}.lambda == 100.0;
  const bool iso = c.recon.threshold == 0.5 && recon::ReconstructOptions{}.threshold == 0.5;
  report("default constants", depth && vis && reg && iso,
         fmt("depth lambda %.6f, visibility %.3g, regulariser %.0f, iso %.2f", c.recon.depth_lambda, c.render.lambda,
             c.track.lambda, c.recon.threshold));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::vector<void (*)()> suites{fusion_gradients, fusion_oracle,       visibility_soundness, ibr_round_trip,
                                       reconstruction_oracle, tracking_round_trip, solver_sanity,
                                       metrics_calibration,   constants};
  for (auto suite : suites) {
    try {
      suite();
    } catch (const std::exception& e) {
      report("suite aborted", false, e.what());
    }
  }
  const double secs = since(t0);
  report("full acceptance runtime", secs < 300.0, fmt("%.1f s (< 300 s)", secs));
  return failures == 0 ? 0 : 1;
}
