#pragma once

#include <cmath>
#include <functional>
#include <type_traits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "hdhuman/core/error.hpp"

namespace hdhuman::tracking {

using Vector = Eigen::VectorXd;
using DenseJacobian = Eigen::MatrixXd;
using SparseJacobian = Eigen::SparseMatrix<double>;

struct GaussNewtonOptions {
  int max_iterations = 50;
  double damping = 1e-4;    // Levenberg mu on the identity
  double tolerance = 1e-8;  // stop once the step norm falls below this
  // Nielsen's update: accepted steps scale mu by max(1/3, 1 - (2 rho - 1)^3)
  // for gain ratio rho, or drop it to min_damping when the linear model
  // predicted the new cost exactly. Rejections multiply mu by a factor that
  // doubles on each consecutive rejection.
  bool adaptive_damping = true;
  double min_damping = 1e-12;
  double max_damping = 1e12;
};

struct GaussNewtonResult {
  Vector x;
  double initial_cost = 0.0;  // ||r(x0)||^2
  double final_cost = 0.0;    // ||r(x)||^2 at the returned x
  int iterations = 0;
  bool converged = false;
  std::vector<double> accepted_costs;  // cost after each accepted step
};

namespace detail {

inline bool finite(const Vector& v) { return v.allFinite(); }

inline Vector solve_damped(const DenseJacobian& j, const Vector& r, double mu) {
  Eigen::MatrixXd h = j.transpose() * j;
  h.diagonal().array() += mu;
  const Vector g = j.transpose() * r;
  return h.ldlt().solve(-g);
}

inline Vector solve_damped(const SparseJacobian& j, const Vector& r, double mu) {
  SparseJacobian h = SparseJacobian(j.transpose()) * j;
  SparseJacobian id(h.rows(), h.cols());
  id.setIdentity();
  h += mu * id;
  Eigen::SimplicialLDLT<SparseJacobian> solver(h);
  if (solver.info() != Eigen::Success) return Vector::Constant(h.rows(), std::nan(""));
  const Vector g = j.transpose() * r;
  return solver.solve(-g);
}

}  // namespace detail

/// Damped Gauss-Newton on r(x). `jacobian` returns dr/dx as a dense or sparse
/// matrix. Returns the lowest-cost iterate seen; the cost of successive
/// accepted iterates never increases.
template <class ResidualFn, class JacobianFn>
GaussNewtonResult gauss_newton(ResidualFn&& residual, JacobianFn&& jacobian, Vector x0,
                               const GaussNewtonOptions& options = {}) {
  GaussNewtonResult out;
  Vector r = residual(x0);
  if (!detail::finite(r)) throw SolverDiverged("residual is not finite at the starting point", x0);
  out.x = std::move(x0);
  out.initial_cost = out.final_cost = r.squaredNorm();
  double mu = options.damping;
  double nu = 2.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const auto j = jacobian(out.x);
    if (j.rows() != r.size() || j.cols() != out.x.size())
      throw Error(ErrorCode::kShape, "jacobian shape does not match residual and parameters");
    const Vector step = detail::solve_damped(j, r, mu);
    if (!detail::finite(step)) throw SolverDiverged("non-finite Gauss-Newton step", out.x);
    const Vector candidate = out.x + step;
    const Vector r_new = residual(candidate);
    if (!detail::finite(r_new)) throw SolverDiverged("residual became non-finite", out.x);
    const double cost = r_new.squaredNorm();
    const double predicted = out.final_cost - (r + j * step).squaredNorm();
    if (cost <= out.final_cost) {
      const double gain = predicted > 0.0 ? (out.final_cost - cost) / predicted : 0.0;
      out.x = candidate;
      r = r_new;
      out.final_cost = cost;
      out.accepted_costs.push_back(cost);
      if (options.adaptive_damping) {
        const double shrink = std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
        mu = std::abs(gain - 1.0) < 1e-6 ? options.min_damping : std::max(mu * shrink, options.min_damping);
        nu = 2.0;
      }
    } else if (options.adaptive_damping) {
      mu = std::min(std::max(mu * nu, options.damping), options.max_damping);
      nu *= 2.0;
    }
    if (step.norm() < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

/// Central-difference Jacobian, used when no analytic one is supplied.
template <class ResidualFn>
DenseJacobian numeric_jacobian(ResidualFn&& residual, const Vector& x, double h = 1e-6) {
  const Vector r0 = residual(x);
  DenseJacobian j(r0.size(), x.size());
  Vector probe = x;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    const double step = h * std::max(1.0, std::abs(x(c)));
    probe(c) = x(c) + step;
    const Vector up = residual(probe);
    probe(c) = x(c) - step;
    const Vector down = residual(probe);
    probe(c) = x(c);
    j.col(c) = (up - down) / (2.0 * step);
  }
  return j;
}

template <class ResidualFn>
GaussNewtonResult gauss_newton(ResidualFn&& residual, Vector x0, const GaussNewtonOptions& options = {}) {
  return gauss_newton(
      residual, [&](const Vector& x) { return numeric_jacobian(residual, x); }, std::move(x0), options);
}

}  // namespace hdhuman::tracking
