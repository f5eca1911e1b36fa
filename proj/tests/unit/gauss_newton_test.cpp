#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hdhuman/tracking/gauss_newton.hpp"

using namespace hdhuman;
using namespace hdhuman::tracking;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// Newton's method with the exact Hessian of the Rosenbrock function and a
// backtracking line search; shares nothing with the damped solver.
double v0(const Vector& x) { return x(0); }

Vector rosenbrock_newton(Vector x) {
  auto f = [](const Vector& v) { return 100.0 * std::pow(v(1) - v(0) * v(0), 2) + std::pow(1.0 - v(0), 2); };
  for (int it = 0; it < 200; ++it) {
    Vector g(2);
    g << -400.0 * v0(x) * (x(1) - v0(x) * v0(x)) - 2.0 * (1.0 - v0(x)), 200.0 * (x(1) - v0(x) * v0(x));
    Eigen::Matrix2d h;
    h << 1200.0 * v0(x) * v0(x) - 400.0 * x(1) + 2.0, -400.0 * v0(x), -400.0 * v0(x), 200.0;
    Vector d = -h.ldlt().solve(g);
    if (g.dot(d) >= 0) d = -g;
    double t = 1.0;
    while (f(x + t * d) > f(x) + 1e-4 * t * g.dot(d) && t > 1e-16) t *= 0.5;
    x += t * d;
  }
  return x;
}

}  // namespace

TEST(GaussNewton, LinearExactInOneUndampedStep) {
  const Eigen::MatrixXd a = random_matrix(12, 4, 1);
  const Vector b = random_matrix(12, 1, 2);
  const Vector oracle = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  GaussNewtonOptions opts;
  opts.damping = 0.0;
  opts.max_iterations = 1;
  const auto res = gauss_newton([&](const Vector& x) { return Vector(a * x - b); },
                                [&](const Vector&) { return a; }, Vector::Zero(4), opts);
  EXPECT_LT((res.x - oracle).norm(), 1e-10);
  EXPECT_NEAR(res.final_cost, (a * oracle - b).squaredNorm(), 1e-10);
}

TEST(GaussNewton, LinearWithinTwoIterationsAtDefaultDamping) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd a = random_matrix(10, 3, 10 + seed);
    const Vector b = random_matrix(10, 1, 50 + seed);
    const Vector oracle = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    GaussNewtonOptions opts;
    opts.max_iterations = 2;
    const auto res = gauss_newton([&](const Vector& x) { return Vector(a * x - b); },
                                  [&](const Vector&) { return a; }, Vector::Zero(3), opts);
    EXPECT_LT((res.x - oracle).norm(), 1e-10) << seed;
  }
}

TEST(GaussNewton, ScalarRoot) {
  const auto res = gauss_newton([](const Vector& x) { return Vector::Constant(1, x(0) * x(0) - 4.0); },
                                [](const Vector& x) { return Eigen::MatrixXd::Constant(1, 1, 2.0 * x(0)); },
                                Vector::Constant(1, 1.0));
  EXPECT_NEAR(res.x(0), 2.0, 1e-8);
  EXPECT_TRUE(res.converged);
}

TEST(GaussNewton, Rosenbrock) {
  auto r = [](const Vector& x) {
    Vector out(2);
    out << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return out;
  };
  auto j = [](const Vector& x) {
    Eigen::MatrixXd out(2, 2);
    out << -20.0 * x(0), 10.0, -1.0, 0.0;
    return out;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto res = gauss_newton(r, j, x0);
  EXPECT_LE(res.iterations, 50);
  EXPECT_NEAR(res.x(0), 1.0, 1e-6);
  EXPECT_NEAR(res.x(1), 1.0, 1e-6);
  const Vector ref = rosenbrock_newton(x0);
  EXPECT_LT((res.x - ref).norm(), 1e-6);
}

TEST(GaussNewton, FiniteDifferenceFallback) {
  auto r = [](const Vector& x) {
    Vector out(3);
    out << x(0) - 1.0, 2.0 * (x(1) + 0.5), std::sin(x(0) + x(1)) - std::sin(0.5);
    return out;
  };
  const auto res = gauss_newton(r, Vector::Zero(2));
  EXPECT_NEAR(res.x(0), 1.0, 1e-7);
  EXPECT_NEAR(res.x(1), -0.5, 1e-7);
}

TEST(GaussNewton, MonotoneAcceptedCosts) {
  auto r = [](const Vector& x) {
    Vector out(2);
    out << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return out;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto res = gauss_newton(r, x0);
  double prev = res.initial_cost;
  for (double c : res.accepted_costs) {
    EXPECT_LE(c, prev);
    prev = c;
  }
  EXPECT_LE(res.final_cost, res.initial_cost);
}

TEST(GaussNewton, DivergenceCarriesLastFiniteIterate) {
  // Finite only for x < 0.5; the first step from 0 lands at 1.
  auto r = [](const Vector& x) {
    return Vector::Constant(1, x(0) < 0.5 ? x(0) - 1.0 : std::numeric_limits<double>::quiet_NaN());
  };
  auto j = [](const Vector&) { return Eigen::MatrixXd::Ones(1, 1); };
  try {
    gauss_newton(r, j, Vector::Zero(1));
    FAIL();
  } catch (const SolverDiverged& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSolverDiverged);
    EXPECT_EQ(e.last_finite()(0), 0.0);
  }
}

TEST(GaussNewton, SparseJacobianMatchesDense) {
  const Eigen::MatrixXd a = random_matrix(8, 5, 3);
  const Vector b = random_matrix(8, 1, 4);
  const SparseJacobian s = a.sparseView();
  auto r = [&](const Vector& x) { return Vector(a * x - b); };
  const auto dense = gauss_newton(r, [&](const Vector&) { return a; }, Vector::Zero(5));
  const auto sparse = gauss_newton(r, [&](const Vector&) { return s; }, Vector::Zero(5));
  EXPECT_LT((dense.x - sparse.x).norm(), 1e-10);
}
