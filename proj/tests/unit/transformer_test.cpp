#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hdhuman/recon/transformer.hpp"
#include "oracles.hpp"

using namespace hdhuman;
using namespace hdhuman::recon;

namespace {

Matrix seeded(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

double loss(const Matrix& phi, const TransformerWeights& w, const Matrix& up) {
  return (transformer_fuse(phi, w).array() * up.array()).sum();
}

double worst_gradient_error(int n, int d, int dk, std::uint64_t seed) {
  const Matrix phi = seeded(n, d, seed);
  const TransformerWeights w = TransformerWeights::random(d, dk, seed + 1);
  const Matrix up = seeded(n, dk, seed + 2);
  const FusionGradients g = transformer_fuse_grad(phi, w, up);
  double worst = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c)
      worst = std::max(worst, oracle::gradient_error(g.phi(r, c), oracle::central_difference(phi, r, c, [&](const Matrix& m) {
                                                       return loss(m, w, up);
                                                     })));
  auto check = [&](const Matrix& analytic, Matrix TransformerWeights::*member) {
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < dk; ++c) {
        const double fd = oracle::central_difference(w.*member, r, c, [&](const Matrix& m) {
          TransformerWeights p = w;
          p.*member = m;
          return loss(phi, p, up);
        });
        worst = std::max(worst, oracle::gradient_error(analytic(r, c), fd));
      }
  };
  check(g.query, &TransformerWeights::query);
  check(g.key, &TransformerWeights::key);
  check(g.value, &TransformerWeights::value);
  return worst;
}

}  // namespace

TEST(Transformer, SingleViewReturnsValue) {
  const Matrix phi = seeded(1, 4, 1);
  const auto w = TransformerWeights::random(4, 3, 2);
  EXPECT_EQ(transformer_fuse(phi, w), detail::rowwise_product(phi, w.value));
}

TEST(Transformer, IdenticalRowsGiveCommonValue) {
  Matrix phi(3, 4);
  for (int i = 0; i < 3; ++i) phi.row(i) << 0.3, -1.2, 0.7, 2.0;
  const auto w = TransformerWeights::random(4, 2, 5);
  const Matrix v = detail::rowwise_product(phi.topRows(1), w.value);
  const Matrix out = transformer_fuse(phi, w);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR((out.row(i) - v.row(0)).norm(), 0.0, 1e-15);
}

TEST(Transformer, MatchesLoopOracle) {
  const Matrix phi = seeded(3, 4, 17);
  const auto w = TransformerWeights::random(4, 2, 18);
  const Matrix ref = oracle::attention(phi, w.query, w.key, w.value);
  EXPECT_LT((transformer_fuse(phi, w) - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transformer, SoftmaxRowsSumToOne) {
  const Matrix phi = seeded(4, 6, 3);
  const auto w = TransformerWeights::random(6, 4, 4);
  const Matrix a = attention_weights(phi, w);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-12);
  EXPECT_GE(a.minCoeff(), 0.0);
}

TEST(Transformer, ZeroPaddedEmbeddingMatchesOracleScale) {
  // Widening d_k with zero columns leaves logits unchanged but the 1/sqrt(d_k)
  // factor must follow the declared width.
  const Matrix phi = seeded(3, 4, 21);
  auto w = TransformerWeights::random(4, 2, 22);
  TransformerWeights wide;
  for (auto [dst, src] : {std::pair{&wide.query, &w.query}, {&wide.key, &w.key}, {&wide.value, &w.value}}) {
    *dst = Matrix::Zero(4, 4);
    dst->leftCols(2) = *src;
  }
  const Matrix ref = oracle::attention(phi, wide.query, wide.key, wide.value);
  EXPECT_LT((transformer_fuse(phi, wide) - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((transformer_fuse(phi, wide).leftCols(2) - transformer_fuse(phi, w)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Transformer, PermutationEquivariantExactly) {
  const Matrix phi = seeded(4, 5, 31);
  const auto w = TransformerWeights::random(5, 3, 32);
  const Matrix base = transformer_fuse(phi, w);
  std::vector<int> perm(4);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Matrix p(4, 5);
    for (int i = 0; i < 4; ++i) p.row(i) = phi.row(perm[i]);
    const Matrix out = transformer_fuse(p, w);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(out.row(i), base.row(perm[i]));
    EXPECT_EQ(fuse_and_pool(out), fuse_and_pool(base));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Transformer, ShapeMismatchRaises) {
  const auto w = TransformerWeights::random(4, 2, 1);
  try {
    transformer_fuse(seeded(2, 3, 1), w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
  EXPECT_THROW(transformer_fuse_grad(seeded(2, 4, 1), w, seeded(3, 2, 1)), Error);
}

TEST(Transformer, ZeroUpstreamGivesZeroGradients) {
  const Matrix phi = seeded(3, 4, 8);
  const auto w = TransformerWeights::random(4, 2, 9);
  const auto g = transformer_fuse_grad(phi, w, Matrix::Zero(3, 2));
  EXPECT_EQ(g.phi.norm() + g.query.norm() + g.key.norm() + g.value.norm(), 0.0);
}

TEST(Transformer, GradientsMatchFiniteDifferences) {
  EXPECT_LT(worst_gradient_error(2, 3, 2, 100), 1e-5);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4), d = 1 + static_cast<int>(rng() % 8),
              dk = 1 + static_cast<int>(rng() % 4);
    EXPECT_LT(worst_gradient_error(n, d, dk, 1000 + trial), 1e-5) << n << "x" << d << " dk=" << dk;
  }
}

TEST(Transformer, GradientPermutesWithViews) {
  Matrix phi = seeded(3, 4, 41);
  phi.row(2) = phi.row(0);
  const auto w = TransformerWeights::random(4, 2, 42);
  Matrix up = seeded(3, 2, 43);
  up.row(2) = up.row(0);
  const auto g = transformer_fuse_grad(phi, w, up);
  Matrix swapped = phi, up_swapped = up;
  swapped.row(0).swap(swapped.row(1));
  up_swapped.row(0).swap(up_swapped.row(1));
  const auto gs = transformer_fuse_grad(swapped, w, up_swapped);
  EXPECT_LT((gs.phi.row(0) - g.phi.row(1)).norm(), 1e-14);
  EXPECT_LT((gs.phi.row(1) - g.phi.row(0)).norm(), 1e-14);
  EXPECT_LT((g.phi.row(0) - g.phi.row(2)).norm(), 1e-14);
}

TEST(Transformer, PoolIsMean) {
  EXPECT_EQ(fuse_and_pool(seeded(1, 3, 5)), Vector(seeded(1, 3, 5).row(0).transpose()));
  Matrix same(3, 2);
  same << 0.1, 0.2, 0.1, 0.2, 0.1, 0.2;
  EXPECT_NEAR((fuse_and_pool(same) - Vector::Map(same.row(0).eval().data(), 2)).norm(), 0.0, 1e-16);
  const Matrix m = seeded(4, 3, 6);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int r = 0; r < 4; ++r) s += m(r, c);
    EXPECT_NEAR(fuse_and_pool(m)(c), s / 4.0, 1e-15);
  }
}
