#pragma once

#include <filesystem>

#include "hdhuman/io/json_io.hpp"
#include "hdhuman/tracking/kinematics.hpp"
#include "hdhuman/tracking/skinning.hpp"

namespace hdhuman::tracking {

using io::json;

inline json weights_to_json(const SkinningWeights& w) {
  json entries = json::array();
  for (const auto& inf : w.vertices) {
    json v = json::array();
    for (const auto& i : inf) v.push_back(json::array({i.joint, i.weight}));
    entries.push_back(std::move(v));
  }
  return {{"vertex_count", w.vertex_count()}, {"entries", std::move(entries)}};
}

inline SkinningWeights weights_from_json(const json& j) {
  try {
    SkinningWeights w;
    const auto count = j.at("vertex_count").get<std::size_t>();
    const json& entries = j.at("entries");
    if (!entries.is_array() || entries.size() != count)
      throw Error(ErrorCode::kInput, "weights file lists " + std::to_string(entries.size()) + " vertices, header says " +
                                         std::to_string(count));
    w.vertices.reserve(count);
    for (const json& v : entries) {
      auto& inf = w.vertices.emplace_back();
      for (const json& pair : v) {
        if (!pair.is_array() || pair.size() != 2) throw Error(ErrorCode::kInput, "weight entry must be [joint, weight]");
        inf.push_back({pair[0].get<int>(), pair[1].get<double>()});
      }
    }
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed skinning weights: ") + e.what());
  }
}

inline json params_to_json(const KinematicParams& p) {
  json theta = json::array();
  for (int j = 0; j < p.joint_count(); ++j) theta.push_back(io::to_json(Vec3(p.rotation(j))));
  return {{"theta", std::move(theta)}, {"root_t", io::to_json(p.root_translation)}};
}

inline KinematicParams params_from_json(const json& j) {
  try {
    const json& theta = j.at("theta");
    if (!theta.is_array()) throw Error(ErrorCode::kInput, "theta must be an array of rotation vectors");
    KinematicParams p = KinematicParams::zero(static_cast<int>(theta.size()));
    for (std::size_t r = 0; r < theta.size(); ++r) p.theta.row(r) = io::vec3_from_json(theta[r]).transpose();
    p.root_translation = io::vec3_from_json(j.at("root_t"));
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed kinematic params: ") + e.what());
  }
}

inline void write_weights(const std::filesystem::path& path, const SkinningWeights& w) {
  io::write_json(path, weights_to_json(w));
}
inline SkinningWeights read_weights(const std::filesystem::path& path) { return weights_from_json(io::read_json(path)); }

inline void write_params(const std::filesystem::path& path, const KinematicParams& p) {
  io::write_json(path, params_to_json(p));
}
inline KinematicParams read_params(const std::filesystem::path& path) { return params_from_json(io::read_json(path)); }

}  // namespace hdhuman::tracking
