// Textured sphere seen by a 1024^2 camera ring: reconstruct with the oracle
// head, then synthesize the view halfway between two ring cameras.
//
//   sphere_novel_view [config.json]
#include <cstdio>

#include "hdhuman/pipeline/commands.hpp"

using namespace hdhuman;

int main(int argc, char** argv) {
  try {
    pipeline::PipelineConfig config;
    if (argc > 1) {
      config = pipeline::load_config(argv[1]);
    } else {
      config.output = "hdhuman_out/sphere_demo";
      config.scene.texture = pipeline::TexturePattern::kChecker;
      config.scene.cameras.width = config.scene.cameras.height = 1024;
      config.scene.cameras.focal = 1120.0;
    }
    pipeline::apply_environment(config);
    const auto all = pipeline::cmd_all(config);
    const auto& recon = all["recon"]["results"]["frames"][0];
    std::printf("reconstruction: %d vertices, watertight %s\n", recon["vertices"].get<int>(),
                recon["watertight"].get<bool>() ? "yes" : "no");
    for (const auto& m : all["eval"]["results"]["metrics"]) {
      const std::string name = m["metric"];
      if (m["value"].is_null())
        std::printf("%-8s inf\n", name.c_str());
      else
        std::printf("%-8s %.5f %s\n", name.c_str(), m["value"].get<double>(), m["units"].get<std::string>().c_str());
    }
    std::printf("hole fraction %.3f\nwrote %s/render/novel.png\n", all["render"]["results"]["hole_fraction"].get<double>(),
                config.output.string().c_str());
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return pipeline::exit_code(e.code());
  }
}
