#pragma once

#include <algorithm>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hdhuman/tracking/deform.hpp"
#include "hdhuman/tracking/ik.hpp"
#include "hdhuman/tracking/refine.hpp"
#include "hdhuman/tracking/skinning.hpp"

namespace hdhuman::tracking {

struct TrackingOptions {
  IkOptions ik;
  RefineOptions refine;
  DeformOptions deform;
  int influences = kMaxInfluences;
  /// Replaces the distance-based rig when set.
  std::optional<SkinningWeights> weights;
  /// Per-frame joint masks for IK (empty = every joint of every frame).
  std::vector<std::vector<bool>> joint_masks;
  int threads = 1;
};

struct FrameTrack {
  KinematicParams ik_params;
  KinematicParams params;  // after rigid refinement
  double refine_energy_before = 0.0;
  double refine_energy_after = 0.0;
  DeformationField delta;
  Mesh mesh;  // topology of the canonical mesh
  bool fallback = false;
  std::string warning;
};

struct TrackingResult {
  int canonical = 0;
  KinematicTree tree;
  SkinningWeights weights;
  std::vector<FrameTrack> frames;
};

/// Frame whose skeleton has the largest sum of pairwise joint distances.
inline int select_canonical_frame(std::span<const Skeleton3D> skeletons) {
  if (skeletons.empty()) throw Error(ErrorCode::kInput, "no frames to choose from");
  int best = 0;
  double best_spread = -1.0;
  for (std::size_t f = 0; f < skeletons.size(); ++f) {
    double spread = 0.0;
    const auto& s = skeletons[f];
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) spread += (s[a] - s[b]).norm();
    if (spread > best_spread) {
      best_spread = spread;
      best = static_cast<int>(f);
    }
  }
  return best;
}

namespace detail {

inline FrameTrack track_frame(const KinematicTree& tree, const Mesh& canonical, const SkinningWeights& weights,
                              const Mesh& recon, const Skeleton3D& target, const TrackingOptions& options,
                              std::size_t frame) {
  IkOptions ik_opts = options.ik;
  if (!options.joint_masks.empty()) ik_opts.active = options.joint_masks[frame];
  FrameTrack out;
  out.ik_params = solve_ik(tree, target, ik_opts).params;
  const RefineResult refined = rigid_refine(out.ik_params, canonical, weights, tree, recon, options.refine);
  out.params = refined.params;
  out.refine_energy_before = refined.energy_before;
  out.refine_energy_after = refined.energy_after;
  const Mesh posed = lbs_deform(canonical, weights, tree, out.params);
  DeformResult deformed = nonrigid_deform(posed, recon, options.deform);
  out.delta = std::move(deformed.delta);
  out.mesh = std::move(deformed.mesh);
  return out;
}

inline bool recoverable(ErrorCode code) {
  return code == ErrorCode::kSolverDiverged || code == ErrorCode::kInvalidMesh || code == ErrorCode::kNoGeometry;
}

}  // namespace detail

/// Rigs the reconstruction of frame `canonical` to its skeleton, then per
/// frame: IK, rigid refinement, non-rigid deformation. Every output mesh has
/// the canonical connectivity. A frame whose solve fails repeats the previous
/// frame's result (the bind pose for a leading failure) and is flagged.
inline TrackingResult track_sequence(int canonical, std::span<const Mesh> recon, std::span<const Skeleton3D> skeletons,
                                     const std::vector<int>& parents, const TrackingOptions& options = {}) {
  const std::size_t frames = recon.size();
  if (frames == 0 || skeletons.size() != frames)
    throw Error(ErrorCode::kInput, "need one skeleton per reconstructed frame and at least one frame");
  if (canonical < 0 || static_cast<std::size_t>(canonical) >= frames)
    throw Error(ErrorCode::kConfiguration, "canonical frame index out of range");
  if (!options.joint_masks.empty() && options.joint_masks.size() != frames)
    throw Error(ErrorCode::kShape, "joint masks must cover every frame");

  TrackingResult out;
  out.canonical = canonical;
  out.tree = KinematicTree(parents, skeletons[canonical].joints);
  const Mesh& base = recon[canonical];
  base.validate();
  if (base.triangles.empty()) throw Error(ErrorCode::kNoGeometry, "canonical frame reconstruction is empty");
  out.weights = options.weights ? *options.weights : rig(base, out.tree, options.influences);
  out.weights.validate(out.tree.joint_count());
  check_weights(out.weights, base.vertices.size());

  std::vector<std::optional<FrameTrack>> solved(frames);
  std::vector<std::string> failures(frames);
  std::vector<std::exception_ptr> fatal(frames);
  auto work = [&](std::size_t f) {
    try {
      solved[f] = detail::track_frame(out.tree, base, out.weights, recon[f], skeletons[f], options, f);
    } catch (const Error& e) {
      if (detail::recoverable(e.code()))
        failures[f] = e.what();
      else
        fatal[f] = std::current_exception();
    } catch (...) {
      fatal[f] = std::current_exception();
    }
  };
  const int threads = std::clamp(options.threads, 1, static_cast<int>(frames));
  if (threads == 1) {
    for (std::size_t f = 0; f < frames; ++f) work(f);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t f = t; f < frames; f += threads) work(f);
      });
  }
  for (auto& e : fatal)
    if (e) std::rethrow_exception(e);

  out.frames.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    if (solved[f]) {
      out.frames[f] = std::move(*solved[f]);
      continue;
    }
    FrameTrack& ft = out.frames[f];
    if (f > 0) {
      ft = out.frames[f - 1];
    } else {
      ft.ik_params = ft.params = KinematicParams::zero(out.tree.joint_count());
      ft.delta.assign(base.vertices.size(), Vec3::Zero());
      ft.mesh = base;
    }
    ft.fallback = true;
    ft.warning = "frame " + std::to_string(f) + " fell back to the previous result: " + failures[f];
  }
  return out;
}

}  // namespace hdhuman::tracking
