#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/error.hpp"
#include "hdhuman/core/skeleton.hpp"

namespace hdhuman::io {

using json = nlohmann::json;

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

inline json to_json(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Mat3 mat3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) throw Error(ErrorCode::kInput, "expected 9 row-major values");
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = j[i].get<double>();
  return m;
}

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInput, "expected 3 values");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json camera_to_json(const Camera& cam) {
  return {{"name", cam.name()},
          {"width", cam.width()},
          {"height", cam.height()},
          {"K", to_json(cam.intrinsics())},
          {"R", to_json(cam.rotation())},
          {"t", to_json(cam.translation())}};
}

inline Camera camera_from_json(const json& j) {
  try {
    return Camera(mat3_from_json(j.at("K")), mat3_from_json(j.at("R")), vec3_from_json(j.at("t")),
                  j.at("width").get<int>(), j.at("height").get<int>(), j.value("name", std::string{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("camera entry: ") + e.what());
  }
}

inline json layout_to_json(const SkeletonLayout& layout) {
  json j{{"joints", layout.joint_count()}, {"parents", layout.parents}, {"hip", layout.hip}, {"neck", layout.neck}};
  if (!layout.names.empty()) j["names"] = layout.names;
  return j;
}

inline SkeletonLayout layout_from_json(const json& j) {
  SkeletonLayout l;
  try {
    l.parents = j.at("parents").get<std::vector<int>>();
    l.hip = j.at("hip").get<int>();
    l.neck = j.at("neck").get<int>();
    if (j.contains("names")) l.names = j.at("names").get<std::vector<std::string>>();
    if (j.contains("joints") && j.at("joints").get<int>() != l.joint_count())
      throw Error(ErrorCode::kInput, "skeleton joint count disagrees with parents");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("skeleton layout: ") + e.what());
  }
  l.validate();
  return l;
}

/// Rig calibration: {"cameras": [...], "skeleton": {...}}. The skeleton
/// block is optional and defaults to BODY_25.
struct Calibration {
  std::vector<Camera> cameras;
  SkeletonLayout layout = SkeletonLayout::body25();
};

inline json calibration_to_json(const Calibration& calib) {
  json cams = json::array();
  for (const auto& c : calib.cameras) cams.push_back(camera_to_json(c));
  return {{"cameras", cams}, {"skeleton", layout_to_json(calib.layout)}};
}

inline Calibration calibration_from_json(const json& j) {
  Calibration calib;
  if (!j.contains("cameras") || !j["cameras"].is_array())
    throw Error(ErrorCode::kInput, "calibration needs a 'cameras' array");
  for (const auto& c : j["cameras"]) calib.cameras.push_back(camera_from_json(c));
  if (j.contains("skeleton")) calib.layout = layout_from_json(j["skeleton"]);
  return calib;
}

inline Calibration read_calibration(const std::filesystem::path& path) {
  return calibration_from_json(read_json(path));
}

inline json skeleton2d_to_json(const Skeleton2D& s) {
  json joints = json::array();
  for (const auto& j : s.joints) joints.push_back({j.pixel.x(), j.pixel.y(), j.confidence});
  return {{"joints", joints}};
}

inline Skeleton2D skeleton2d_from_json(const json& j) {
  Skeleton2D s;
  try {
    for (const auto& e : j.at("joints")) {
      if (e.size() != 3) throw Error(ErrorCode::kInput, "2D joint needs [x, y, confidence]");
      s.joints.push_back({Pixel(e[0].get<double>(), e[1].get<double>()), e[2].get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("skeleton2d: ") + e.what());
  }
  return s;
}

inline json skeleton3d_to_json(const Skeleton3D& s) {
  json joints = json::array();
  for (const auto& p : s.joints) joints.push_back(to_json(p));
  return {{"joints", joints}};
}

inline Skeleton3D skeleton3d_from_json(const json& j) {
  Skeleton3D s;
  try {
    for (const auto& e : j.at("joints")) s.joints.push_back(vec3_from_json(e));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("skeleton3d: ") + e.what());
  }
  return s;
}

}  // namespace hdhuman::io
