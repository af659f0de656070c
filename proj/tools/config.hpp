#pragma once

#include "qavg/mdp.hpp"
#include "qavg/sa.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qavg::cli {

/// Malformed or inconsistent experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MdpSource {
  enum class Kind { random, file, inline_document };
  Kind kind = Kind::random;
  Index n_states = 4;
  Index n_actions = 3;
  std::uint64_t seed = 0;
  RandomRewards rewards = RandomRewards::uniform_means;
  std::filesystem::path path;
  std::string document;
};

struct QuantileSettings {
  Index dim = 1;
  Index grid_size = 1000;
  long n_sims = 100000;
  std::vector<double> levels{0.90, 0.95, 0.99};
};

struct DiagnoseSettings {
  std::vector<std::string> checks{"ajt", "uniform_approx", "clt", "entropy_bias"};
  std::vector<std::int64_t> T_values{250, 500, 1000, 2000};
  /// (j, T) pairs for the ajt table; empty means j in {0, 1, T/2, T} per T value.
  std::vector<std::pair<std::int64_t, std::int64_t>> ajt_pairs;
  std::vector<double> lambdas{0.01, 0.1, 1.0};
  double entropy_tol = 1e-8;
};

/**
 * Everything an experiment run depends on. Outputs are a pure function of
 * this structure; `threads` only changes wall-clock time.
 */
struct ExperimentConfig {
  MdpSource mdp;
  std::optional<double> gamma;
  std::vector<double> gamma_sweep;
  StepSchedule schedule = StepSchedule::polynomial(0.51);
  std::int64_t T = 10000;
  std::vector<std::int64_t> T_checkpoints;
  long n_trials = 100;
  std::optional<double> warmup_fraction;
  double epsilon = 1e-4;
  double level = 0.95;
  std::optional<double> critical_value;
  Variant variant = Variant::plain;
  std::optional<double> lambda;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  int checkpoints_per_decade = 50;
  bool all_coordinates = false;
  bool full_var_q = false;
  QuantileSettings quantiles;
  DiagnoseSettings diagnose;

  /// Source text, echoed verbatim into the output directory.
  std::string raw_text;
  /// Directory of the config file; relative MDP paths resolve against it.
  std::filesystem::path base_dir;

  double warmup_or(double fallback) const { return warmup_fraction.value_or(fallback); }
};

/// Parses a JSON config document. Errors carry "line L, column C" for syntax
/// problems and the offending key (with its line when it can be located)
/// for type or range problems.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the MDP named by the config, applying `gamma` when given.
TabularMDP make_mdp(const ExperimentConfig& config);

}  // namespace qavg::cli
