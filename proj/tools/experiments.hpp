#pragma once

#include "config.hpp"

#include "qavg/diagnostics.hpp"
#include "qavg/exact.hpp"
#include "qavg/inference.hpp"
#include "qavg/observers.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace qavg::cli {

/// Collects the files an experiment writes and finishes the directory with
/// config.json (the config text, verbatim) and manifest.csv (file,rows).
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  /// Writes one CSV; `body` returns the number of data rows it emitted.
  void write(const std::string& name, const std::function<long(std::ostream&)>& body);
  void finish(const ExperimentConfig& config);

  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, long>> files_;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
};

/// Ordinary least squares of log y on log x. Needs two distinct x values.
LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// First checkpoint index from which every later value stays <= epsilon;
/// -1 when the last value is above epsilon (censored).
long first_persistent_crossing(const std::vector<double>& values, double epsilon);

// Each command reads the config, writes its CSVs under config.output_dir and
// returns what it computed. `log` receives the human-readable report.

SolveResult cmd_solve(const ExperimentConfig& config, std::ostream& log);

struct TrainResult {
  RunState state;
  std::vector<ErrorCurveRecorder::Point> curve;
  ConfidenceReport ci;
};
TrainResult cmd_train(const ExperimentConfig& config, std::ostream& log);

struct CoverageRow {
  std::int64_t T = 0;
  Index coord = 0;
  double coverage_rate = 0.0;
  double mean_ci_length = 0.0;
  long n_trials = 0;
};
std::vector<CoverageRow> cmd_coverage(const ExperimentConfig& config, std::ostream& log);

struct ComplexityRow {
  double gamma = 0.0;
  double var_q_diag_inf = 0.0;
  double inv_one_minus_gamma = 0.0;
  std::int64_t T_eps = -1;
  bool censored = false;
};
struct ComplexityReport {
  std::vector<ComplexityRow> rows;
  LinearFit fit_var_q;    ///< log T(eps, gamma) on log ||diag Var_Q||_inf
  LinearFit fit_horizon;  ///< log T(eps, gamma) on log 1/(1 - gamma)
};
ComplexityReport cmd_complexity(const ExperimentConfig& config, std::ostream& log);

QuantileTable cmd_quantiles(const ExperimentConfig& config, std::ostream& log);

struct DiagnoseReport {
  struct AjtRow {
    std::int64_t j, T;
    double norm;
  };
  struct MetricRow {
    std::int64_t T;
    double metric;
  };
  std::vector<AjtRow> ajt;
  std::vector<MetricRow> uniform_approx;
  std::optional<CltSummary> clt;
  std::vector<EntropyBiasRow> entropy_bias;
};
DiagnoseReport cmd_diagnose(const ExperimentConfig& config, std::ostream& log);

/// Dispatches a command name; returns false for an unknown name.
bool run_command(const std::string& name, const ExperimentConfig& config, std::ostream& log);

}  // namespace qavg::cli
