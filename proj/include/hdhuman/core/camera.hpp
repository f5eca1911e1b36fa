#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/geometry.hpp"

namespace hdhuman {

struct Projection {
  Pixel pixel;
  double depth;  // camera-space z, meters
};

/// Pinhole camera with world-to-camera extrinsics.
///
/// Conventions: X_cam = R * X_world + t, +z looks forward, the pixel origin
/// is the top-left corner and integer pixel coordinates are pixel centers, so
/// the image covers [-0.5, width - 0.5) x [-0.5, height - 0.5).
class Camera {
 public:
  Camera(const Mat3& intrinsics, const Mat3& rotation, const Vec3& translation, int width,
         int height, std::string name = {})
      : k_(intrinsics),
        r_(rotation),
        t_(translation),
        width_(width),
        height_(height),
        name_(std::move(name)) {
    validate();
    k_inv_ = k_.inverse();
  }

  /// Camera at `eye` looking at `target`; `up` fixes the roll (image y
  /// points along -up).
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                        int width, int height, std::string name = {}) {
    const Vec3 z = (target - eye).normalized();
    Vec3 down = -(up - up.dot(z) * z);
    if (down.norm() < 1e-12) throw Error(ErrorCode::kInvalidCamera, "up vector parallel to view");
    down.normalize();
    const Vec3 x = down.cross(z);
    Mat3 r;
    r.row(0) = x.transpose();
    r.row(1) = down.transpose();
    r.row(2) = z.transpose();
    Mat3 k = Mat3::Identity();
    k(0, 0) = focal;
    k(1, 1) = focal;
    k(0, 2) = 0.5 * (width - 1);
    k(1, 2) = 0.5 * (height - 1);
    return Camera(k, r, -r * eye, width, height, std::move(name));
  }

  const Mat3& intrinsics() const { return k_; }
  const Mat3& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& name() const { return name_; }

  Vec3 center() const { return -(r_.transpose() * t_); }
  Vec3 to_camera(const Point3& world) const { return r_ * world + t_; }
  double depth_of(const Point3& world) const { return r_.row(2).dot(world) + t_.z(); }

  Projection project(const Point3& world) const {
    const Vec3 c = to_camera(world);
    if (!(c.z() > 0.0)) throw Error(ErrorCode::kBehindCamera, "point is not in front of camera");
    const Vec3 h = k_ * c;
    return {Pixel(h.x() / h.z(), h.y() / h.z()), c.z()};
  }

  Point3 unproject(const Pixel& pixel, double depth) const {
    if (!(depth > 0.0)) throw Error(ErrorCode::kInvalidDepth, "unproject needs a positive depth");
    const Vec3 c = depth * (k_inv_ * Vec3(pixel.x(), pixel.y(), 1.0));
    return r_.transpose() * (c - t_);
  }

  /// Unit world-space direction of the viewing ray through `pixel`.
  Vec3 ray_direction(const Pixel& pixel) const {
    return (r_.transpose() * (k_inv_ * Vec3(pixel.x(), pixel.y(), 1.0))).normalized();
  }

  bool in_image(const Pixel& p) const {
    return p.x() >= -0.5 && p.x() < width_ - 0.5 && p.y() >= -0.5 && p.y() < height_ - 0.5;
  }

 private:
  void validate() const {
    if (width_ <= 0 || height_ <= 0) throw Error(ErrorCode::kInvalidCamera, "non-positive resolution");
    if (!k_.allFinite() || !r_.allFinite() || !t_.allFinite())
      throw Error(ErrorCode::kInvalidCamera, "non-finite camera parameters");
    if (k_(1, 0) != 0.0 || k_(2, 0) != 0.0 || k_(2, 1) != 0.0 || k_(2, 2) != 1.0)
      throw Error(ErrorCode::kInvalidCamera, "intrinsics must be upper triangular with K(2,2) = 1");
    if (!(k_(0, 0) > 0.0) || !(k_(1, 1) > 0.0))
      throw Error(ErrorCode::kInvalidCamera, "focal lengths must be positive");
    if (k_(0, 2) < 0.0 || k_(0, 2) > width_ || k_(1, 2) < 0.0 || k_(1, 2) > height_)
      throw Error(ErrorCode::kInvalidCamera, "principal point outside the image");
    if ((r_.transpose() * r_ - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || r_.determinant() < 0.0)
      throw Error(ErrorCode::kInvalidCamera, "rotation is not a proper orthonormal matrix");
  }

  Mat3 k_;
  Mat3 k_inv_;
  Mat3 r_;
  Vec3 t_;
  int width_;
  int height_;
  std::string name_;
};

/// Camera whose viewing ring sits at `radius` around `target` in the
/// horizontal plane, `index` of `count` evenly spaced yaw positions.
inline Camera ring_camera(int index, int count, double radius, double pitch_rad, double focal,
                          int width, int height, const Vec3& target = Vec3::Zero()) {
  const double yaw = 2.0 * M_PI * index / count;
  const Vec3 eye = target + radius * Vec3(std::sin(yaw) * std::cos(pitch_rad), std::sin(pitch_rad),
                                          std::cos(yaw) * std::cos(pitch_rad));
  return Camera::look_at(eye, target, Vec3(0.0, 1.0, 0.0), focal, width, height,
                         "cam" + std::to_string(index));
}

}  // namespace hdhuman
