#pragma once

#include <string>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/geometry.hpp"

namespace hdhuman {

struct Joint2D {
  Pixel pixel = Pixel::Zero();
  double confidence = 0.0;
};

struct Skeleton2D {
  std::vector<Joint2D> joints;
};

struct Skeleton3D {
  std::vector<Point3> joints;

  std::size_t size() const { return joints.size(); }
  const Point3& operator[](std::size_t i) const { return joints[i]; }
};

/// Joint topology: parent per joint (-1 for the root) plus the indices used
/// for depth normalization.
struct SkeletonLayout {
  std::vector<int> parents;
  int hip = 0;
  int neck = 1;
  std::vector<std::string> names;

  int joint_count() const { return static_cast<int>(parents.size()); }

  void validate() const {
    const int n = joint_count();
    if (n < 2) throw Error(ErrorCode::kConfiguration, "skeleton layout needs at least two joints");
    if (hip < 0 || hip >= n || neck < 0 || neck >= n || hip == neck)
      throw Error(ErrorCode::kConfiguration, "hip/neck indices invalid");
    if (!names.empty() && static_cast<int>(names.size()) != n)
      throw Error(ErrorCode::kConfiguration, "joint names do not match joint count");
  }

  /// OpenPose BODY_25 ordering, rooted at the mid hip.
  static SkeletonLayout body25() {
    SkeletonLayout l;
    l.parents = {1, 8, 1, 2, 3, 1, 5, 6, -1, 8, 9, 10, 8, 12, 13,
                 0, 0, 15, 16, 14, 19, 14, 11, 22, 11};
    l.hip = 8;
    l.neck = 1;
    l.names = {"Nose",      "Neck",     "RShoulder", "RElbow",  "RWrist",    "LShoulder", "LElbow",
               "LWrist",    "MidHip",   "RHip",      "RKnee",   "RAnkle",    "LHip",      "LKnee",
               "LAnkle",    "REye",     "LEye",      "REar",    "LEar",      "LBigToe",   "LSmallToe",
               "LHeel",     "RBigToe",  "RSmallToe", "RHeel"};
    return l;
  }

  /// Serial chain 0 -> 1 -> ... -> n-1.
  static SkeletonLayout chain(int n, int hip = 0, int neck = 1) {
    SkeletonLayout l;
    for (int i = 0; i < n; ++i) l.parents.push_back(i - 1);
    l.hip = hip;
    l.neck = neck;
    return l;
  }
};

}  // namespace hdhuman
