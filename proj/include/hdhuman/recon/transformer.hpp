#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/error.hpp"

namespace hdhuman::recon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Query/key/value projections (each D x d_k), shared by all points and views.
struct TransformerWeights {
  Matrix query;
  Matrix key;
  Matrix value;

  int input_dim() const { return static_cast<int>(query.rows()); }
  int embed_dim() const { return static_cast<int>(query.cols()); }

  void validate() const {
    if (query.rows() == 0 || query.cols() == 0) throw Error(ErrorCode::kShape, "empty transformer weights");
    if (key.rows() != query.rows() || value.rows() != query.rows() || key.cols() != query.cols() ||
        value.cols() != query.cols())
      throw Error(ErrorCode::kShape, "W_q, W_k, W_v must share one D x d_k shape");
    if (!query.allFinite() || !key.allFinite() || !value.allFinite())
      throw Error(ErrorCode::kShape, "non-finite transformer weights");
  }

  /// Glorot-uniform initialisation from a seed.
  static TransformerWeights random(int input_dim, int embed_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double a = std::sqrt(6.0 / (input_dim + embed_dim));
    std::uniform_real_distribution<double> u(-a, a);
    auto fill = [&] {
      Matrix m(input_dim, embed_dim);
      for (int r = 0; r < input_dim; ++r)
        for (int c = 0; c < embed_dim; ++c) m(r, c) = u(rng);
      return m;
    };
    TransformerWeights w;
    w.query = fill();
    w.key = fill();
    w.value = fill();
    return w;
  }
};

namespace detail {

// Row-by-row product with a fixed inner loop order, so each output row
// depends only on the matching input row.
inline Matrix rowwise_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, c);
      out(i, c) = s;
    }
  return out;
}

struct Attention {
  Matrix q, k, v;
  Matrix weights;  // row-stochastic N x N
  Matrix output;   // N x d_k
};

inline Attention attend(const Matrix& phi, const TransformerWeights& w) {
  w.validate();
  if (phi.rows() < 1) throw Error(ErrorCode::kShape, "need at least one view row");
  if (phi.cols() != w.input_dim())
    throw Error(ErrorCode::kShape, "feature width " + std::to_string(phi.cols()) + " != weight input dim " +
                                       std::to_string(w.input_dim()));
  Attention at;
  at.q = rowwise_product(phi, w.query);
  at.k = rowwise_product(phi, w.key);
  at.v = rowwise_product(phi, w.value);
  const Eigen::Index n = phi.rows(), dk = w.embed_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  at.weights.resize(n, n);
  at.output.resize(n, dk);
  std::vector<double> logits(n);
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < dk; ++c) s += at.q(i, c) * at.k(j, c);
      logits[j] = s * scale;
    }
    // Reductions over views run in value order, so the output does not
    // depend on how the views were listed.
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (logits[a] != logits[b]) return logits[a] < logits[b];
      for (Eigen::Index c = 0; c < dk; ++c)
        if (at.v(a, c) != at.v(b, c)) return at.v(a, c) < at.v(b, c);
      return false;
    });
    const double peak = logits[order.back()];
    double denom = 0.0;
    for (Eigen::Index j : order) {
      at.weights(i, j) = std::exp(logits[j] - peak);
      denom += at.weights(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) at.weights(i, j) /= denom;
    for (Eigen::Index c = 0; c < dk; ++c) {
      double s = 0.0;
      for (Eigen::Index j : order) s += at.weights(i, j) * at.v(j, c);
      at.output(i, c) = s;
    }
  }
  return at;
}

}  // namespace detail

/// softmax(Phi W_q (Phi W_k)^T / sqrt(d_k)) Phi W_v over the N view rows.
inline Matrix transformer_fuse(const Matrix& phi, const TransformerWeights& w) {
  return detail::attend(phi, w).output;
}

/// Row-stochastic attention matrix used by transformer_fuse.
inline Matrix attention_weights(const Matrix& phi, const TransformerWeights& w) {
  return detail::attend(phi, w).weights;
}

struct FusionGradients {
  Matrix phi;
  Matrix query;
  Matrix key;
  Matrix value;
};

/// Reverse-mode gradients of transformer_fuse contracted with `upstream`
/// (dL/d output, N x d_k).
inline FusionGradients transformer_fuse_grad(const Matrix& phi, const TransformerWeights& w, const Matrix& upstream) {
  const detail::Attention at = detail::attend(phi, w);
  if (upstream.rows() != at.output.rows() || upstream.cols() != at.output.cols())
    throw Error(ErrorCode::kShape, "upstream gradient shape mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.embed_dim()));
  const Matrix& a = at.weights;
  const Matrix d_v = a.transpose() * upstream;
  const Matrix d_a = upstream * at.v.transpose();
  // Softmax backward: dS_ij = A_ij (dA_ij - sum_l A_il dA_il).
  const Vector row_dot = (a.array() * d_a.array()).rowwise().sum();
  const Matrix d_s = (a.array() * (d_a.colwise() - row_dot).array()).matrix();
  const Matrix d_q = scale * d_s * at.k;
  const Matrix d_k = scale * d_s.transpose() * at.q;
  FusionGradients g;
  g.query = phi.transpose() * d_q;
  g.key = phi.transpose() * d_k;
  g.value = phi.transpose() * d_v;
  g.phi = d_q * w.query.transpose() + d_k * w.key.transpose() + d_v * w.value.transpose();
  return g;
}

/// Mean over the N fused view rows.
inline Vector fuse_and_pool(const Matrix& fused) {
  if (fused.rows() < 1) throw Error(ErrorCode::kShape, "cannot pool zero rows");
  Vector out(fused.cols());
  for (Eigen::Index c = 0; c < fused.cols(); ++c) {
    std::vector<double> column(fused.col(c).data(), fused.col(c).data() + fused.rows());
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) s += v;
    out(c) = s / static_cast<double>(fused.rows());
  }
  return out;
}

}  // namespace hdhuman::recon
