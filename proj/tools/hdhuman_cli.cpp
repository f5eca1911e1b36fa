// Pipeline driver: scene generation, reconstruction, tracking, rendering and
// evaluation as subcommands sharing one JSON config.
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hdhuman/pipeline/commands.hpp"

namespace pl = hdhuman::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"hdhuman pipeline"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config_path, "JSON pipeline config");
  app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for all randomness");
  app.add_option("--out", out, "output directory");

  const std::map<std::string, std::function<pl::json(const pl::PipelineConfig&)>> commands{
      {"gen-scene", pl::cmd_gen_scene}, {"reconstruct", pl::cmd_reconstruct}, {"track", pl::cmd_track},
      {"render", pl::cmd_render},       {"eval", pl::cmd_eval},               {"all", pl::cmd_all}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, "run the " + name + " stage")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    pl::PipelineConfig config = config_path.empty() ? pl::PipelineConfig{} : pl::load_config(config_path);
    pl::apply_environment(config);
    // Flags take precedence over the environment.
    if (threads) config.threads = *threads;
    if (seed) config.seed = *seed;
    if (!out.empty()) config.output = out;
    config.validate();
    const std::string name = app.get_subcommands().front()->get_name();
    const pl::json manifest = commands.at(name)(config);
    std::cout << manifest.dump(2) << '\n';
    return 0;
  } catch (const hdhuman::Error& e) {
    std::fprintf(stderr, "hdhuman_cli: %s\n", e.what());
    return pl::exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "hdhuman_cli: %s\n", e.what());
    return 3;
  }
}
