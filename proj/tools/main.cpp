#include "config.hpp"
#include "experiments.hpp"

#include "qavg/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaged synchronous Q-learning experiments"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  std::uint64_t seed = 0;

  app.add_option("command", command, "solve | train | coverage | complexity | quantiles | diagnose")
      ->required()
      ->check(CLI::IsMember({"solve", "train", "coverage", "complexity", "quantiles", "diagnose"}));
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (overrides threads)")
                          ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides master_seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    auto config = qavg::cli::load_config(config_path);
    if (*out_opt) config.output_dir = out_dir;
    if (*threads_opt) config.threads = threads;
    if (*seed_opt) config.master_seed = seed;
    qavg::cli::run_command(command, config, std::cout);
  } catch (const qavg::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qavg::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qavg::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
