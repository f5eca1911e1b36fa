#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace hdhuman {

enum class ErrorCode {
  kBehindCamera,
  kInvalidDepth,
  kInvalidCamera,
  kInvalidMesh,
  kConfiguration,
  kShape,
  kDegenerateSkeleton,
  kOutOfView,
  kInsufficientViews,
  kSolverDiverged,
  kNoGeometry,
  kMetric,
  kInput,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera: return "behind-camera";
    case ErrorCode::kInvalidDepth: return "invalid-depth";
    case ErrorCode::kInvalidCamera: return "invalid-camera";
    case ErrorCode::kInvalidMesh: return "invalid-mesh";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kDegenerateSkeleton: return "degenerate-skeleton";
    case ErrorCode::kOutOfView: return "out-of-view";
    case ErrorCode::kInsufficientViews: return "insufficient-views";
    case ErrorCode::kSolverDiverged: return "solver-diverged";
    case ErrorCode::kNoGeometry: return "no-geometry";
    case ErrorCode::kMetric: return "metric";
    case ErrorCode::kInput: return "input";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The code lets
/// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a residual turns non-finite mid-solve. Carries the last
/// iterate whose residual was finite.
class SolverDiverged : public Error {
 public:
  SolverDiverged(const std::string& what, Eigen::VectorXd last_finite)
      : Error(ErrorCode::kSolverDiverged, what), last_finite_(std::move(last_finite)) {}

  const Eigen::VectorXd& last_finite() const noexcept { return last_finite_; }

 private:
  Eigen::VectorXd last_finite_;
};

}  // namespace hdhuman
