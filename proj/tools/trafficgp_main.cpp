#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "trafficgp/commands.hpp"

namespace {

// exit codes: 0 success, 1 runtime failure, 2 configuration error
int run(const std::string &command, const std::string &config_path,
        const std::optional<std::uint64_t> &seed,
        const std::optional<int> &threads,
        const std::optional<std::string> &output) {
  using namespace trafficgp;
  try {
    RunConfig cfg = load_config(config_path);
    if (seed.has_value()) cfg.seed = *seed;
    if (threads.has_value()) {
      if (*threads < 1) throw ConfigError("--threads: must be >= 1");
      cfg.threads = *threads;
    }
    if (output.has_value()) cfg.output_dir = *output;

    if (command == "ingest") cmd_ingest(cfg);
    else if (command == "fit") cmd_fit(cfg);
    else if (command == "predict") cmd_predict(cfg);
    else if (command == "sweep") cmd_sweep(cfg);
    else cmd_synth(cfg);
    return 0;
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Traffic-speed field reconstruction from sparse vehicle "
               "trajectories (anisotropic sparse GP regression)"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output;

  std::vector<CLI::App *> subs;
  for (const char *name : {"ingest", "fit", "predict", "sweep", "synth"}) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")
        ->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--threads", threads, "override the worker count");
    sub->add_option("--output", output, "override the output directory");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return run(app.get_subcommands().front()->get_name(), config_path, seed,
             threads, output);
}
