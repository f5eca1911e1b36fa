// Animated stick figure: per-frame reconstruction, then tracking every frame
// with the canonical mesh's connectivity. Prints how far the tracked meshes
// sit from each frame's reconstruction and from the ground truth.
//
//   stick_tracking [frames]
#include <cstdio>
#include <cstdlib>

#include "hdhuman/pipeline/commands.hpp"

using namespace hdhuman;

int main(int argc, char** argv) {
  try {
    pipeline::PipelineConfig config;
    config.output = "hdhuman_out/stick_demo";
    config.scene.geometry = pipeline::Geometry::kStickFigure;
    config.scene.frames = argc > 1 ? std::atoi(argv[1]) : 4;
    config.recon.bounds = "skeleton";
    config.recon.resolution = 72;
    pipeline::apply_environment(config);
    config.validate();
    pipeline::cmd_gen_scene(config);
    pipeline::cmd_reconstruct(config);
    const auto track = pipeline::detail::track_stage(config);
    std::printf("canonical frame %d\n", track["results"]["canonical"].get<int>());
    std::printf("frame  fallback  mean-to-recon  max-to-recon  mean-to-truth\n");
    for (const auto& f : track["results"]["frames"]) {
      const std::size_t i = f["frame"];
      const Mesh tracked = io::read_ply(config.output / "track" / (pipeline::frame_name(i) + ".ply"));
      const Mesh truth = io::read_ply(config.output / "scene" / pipeline::frame_name(i) / "mesh.ply");
      std::printf("%5zu  %8s  %13.5f  %12.5f  %13.5f\n", i, f["fallback"].get<bool>() ? "yes" : "no",
                  f["mean_surface_distance"].get<double>(), f["max_surface_distance"].get<double>(),
                  metrics::p2s(tracked, truth, 20000));
    }
    pipeline::detail::check_tracking(track);
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return pipeline::exit_code(e.code());
  }
}
