#include "experiments.hpp"

#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace qavg::cli {

namespace fs = std::filesystem;

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::function<long(std::ostream&)>& body) {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
  long rows = body(out);
  files_.emplace_back(name, rows);
}

void OutputDir::finish(const ExperimentConfig& config) {
  {
    std::ofstream out(dir_ / "config.json", std::ios::binary);
    out << config.raw_text;
  }
  std::ofstream out(dir_ / "manifest.csv", std::ios::binary);
  CsvWriter csv(out);
  csv.header({"file", "rows"});
  for (const auto& [name, rows] : files_) csv.row(name, rows);
}

LinearFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ParameterError("fit needs paired samples");
  if (x.size() < 2) throw ParameterError("fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ParameterError("log-log fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("fit needs two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_points = x.size();
  return fit;
}

long first_persistent_crossing(const std::vector<double>& values, double epsilon) {
  long first = -1;
  for (long k = static_cast<long>(values.size()) - 1; k >= 0; --k) {
    if (!(values[static_cast<std::size_t>(k)] <= epsilon)) break;
    first = k;
  }
  return first;
}

namespace {

/// Center and variance the averaged iterates are compared against: Q* for
/// plain Q-learning, Q*_lambda for the entropy-regularized variant.
struct Target {
  Vector center;
  Vector var_diag;
};

Target target_for(const TabularMDP& mdp, const ExperimentConfig& config) {
  if (config.variant == Variant::entropy) {
    auto soft = regularized_fixed_point(mdp, *config.lambda);
    return {soft.q_lambda, soft.var_q_reg.diagonal()};
  }
  auto hard = solve(mdp);
  return {hard.q_star, hard.var_q.diagonal()};
}

RunConfig base_run(const ExperimentConfig& config) {
  RunConfig run;
  run.schedule = config.schedule;
  run.horizon = config.T;
  run.variant = config.variant;
  run.lambda = config.lambda;
  return run;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

/// Feeds one trajectory into one random-scaling accumulator per checkpoint,
/// accumulator k covering iterations floor(w T_k) + 1 .. T_k. The recursion
/// ignores warm-up, so this matches separate runs of length T_k.
class CheckpointCoverage : public TrajectoryObserver {
 public:
  CheckpointCoverage(const std::vector<std::int64_t>& checkpoints, double warmup_fraction,
                     const Vector& target, const std::vector<Index>& coords, double level,
                     std::optional<double> critical_value)
      : checkpoints_(checkpoints),
        target_(target),
        coords_(coords),
        level_(level),
        critical_value_(critical_value) {
    for (auto T : checkpoints_) {
      starts_.push_back(static_cast<std::int64_t>(std::floor(warmup_fraction * static_cast<double>(T))));
      accs_.emplace_back(target.size(), CovarianceMode::diagonal);
    }
    covered_.assign(checkpoints_.size() * coords_.size(), 0.0);
    length_.assign(checkpoints_.size() * coords_.size(), 0.0);
  }

  void observe(const RunState& state) override {
    for (std::size_t k = first_open_; k < checkpoints_.size(); ++k) {
      if (state.t <= starts_[k]) continue;
      accs_[k].update(state.q);
      if (state.t == checkpoints_[k]) {
        auto ci = confidence_interval(accs_[k].mean(), accs_[k].covariance_diagonal(),
                                      accs_[k].count(), level_, critical_value_);
        for (std::size_t c = 0; c < coords_.size(); ++c) {
          const Index i = coords_[c];
          covered_[k * coords_.size() + c] = ci.covers(i, target_(i)) ? 1.0 : 0.0;
          length_[k * coords_.size() + c] = 2.0 * ci.halfwidth(i);
        }
        first_open_ = k + 1;
      }
    }
  }

  std::vector<double> covered_;
  std::vector<double> length_;

 private:
  std::vector<std::int64_t> checkpoints_;
  std::vector<std::int64_t> starts_;
  std::vector<RsAccumulator> accs_;
  Vector target_;
  std::vector<Index> coords_;
  double level_;
  std::optional<double> critical_value_;
  std::size_t first_open_ = 0;
};

}  // namespace

SolveResult cmd_solve(const ExperimentConfig& config, std::ostream& log) {
  TabularMDP mdp = make_mdp(config);
  SolveResult result = solve(mdp);
  OutputDir out(config.output_dir);
  const Index n_actions = mdp.n_actions();
  out.write("mdp.json", [&](std::ostream& os) {
    os << to_json(mdp);
    return 1L;
  });
  out.write("q_star.csv", [&](std::ostream& os) {
    write_q_star_csv(os, result, n_actions);
    return static_cast<long>(mdp.n_pairs());
  });
  out.write("var.csv", [&](std::ostream& os) {
    write_var_csv(os, result, n_actions);
    return static_cast<long>(mdp.n_pairs());
  });
  if (config.full_var_q) {
    out.write("var_q_full.csv", [&](std::ostream& os) {
      write_var_q_full_csv(os, result.var_q);
      return static_cast<long>(mdp.n_pairs());
    });
  }
  out.finish(config);

  for (Index s = 0; s < mdp.n_states(); ++s) {
    for (Index a = 0; a < n_actions; ++a) {
      log << "Q*(" << s << "," << a << ") = " << fmt(result.q_star(mdp.pair(s, a))) << '\n';
    }
  }
  const double var_inf = result.var_q_diag_inf();
  const double one_minus = 1.0 - mdp.gamma();
  if (result.gap.single_action) {
    log << "gap = inf (single action)\n";
  } else if (result.gap.degenerate) {
    log << "gap = 0 (degenerate: optimal policy not unique)\n";
  } else {
    log << "gap = " << fmt(result.gap.gap) << "\nL = " << fmt(result.gap.lipschitz) << '\n';
  }
  log << "||diag Var_Q||_inf = " << fmt(var_inf) << '\n';
  log << "||diag Var_Q||_inf (1-gamma)^3 = " << fmt(var_inf * one_minus * one_minus * one_minus)
      << '\n';
  log << "value iteration: " << result.iterations << " iterations, residual "
      << fmt(result.residual) << '\n';
  return result;
}

TrainResult cmd_train(const ExperimentConfig& config, std::ostream& log) {
  TabularMDP mdp = make_mdp(config);
  Target target = target_for(mdp, config);
  RunConfig run = base_run(config);
  run.seed = derive_seed(config.master_seed, 0);
  run.warmup_fraction = config.warmup_or(0.0);
  run.inference = CovarianceMode::diagonal;

  ErrorCurveRecorder recorder(target.center, log_checkpoints(config.T, config.checkpoints_per_decade));
  TrajectoryObserver* observers[] = {&recorder};
  TrainResult result{run_trajectory(mdp, run, observers), recorder.points(), {}};
  result.ci = confidence_interval(result.state.q_bar, result.state.rs->covariance_diagonal(),
                                  result.state.n_averaged, config.level, config.critical_value);
  result.ci.warmup = result.state.warmup;

  OutputDir out(config.output_dir);
  out.write("error_curve.csv", [&](std::ostream& os) {
    recorder.write_csv(os);
    return static_cast<long>(recorder.points().size());
  });
  out.write("confidence.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"s", "a", "q_bar", "halfwidth", "lower", "upper", "target"});
    for (Index s = 0; s < mdp.n_states(); ++s) {
      for (Index a = 0; a < mdp.n_actions(); ++a) {
        Index i = mdp.pair(s, a);
        csv.row(s, a, result.ci.center(i), result.ci.halfwidth(i), result.ci.lower()(i),
                result.ci.upper()(i), target.center(i));
      }
    }
    return csv.rows();
  });
  out.finish(config);

  log << "iterations: " << result.state.t << " (warm-up " << result.state.warmup << ")\n";
  log << "||Q_T - target||_inf = " << fmt(linf(Vector(result.state.q - target.center))) << '\n';
  log << "||Qbar_T - target||_inf = " << fmt(linf(Vector(result.state.q_bar - target.center)))
      << '\n';
  return result;
}

std::vector<CoverageRow> cmd_coverage(const ExperimentConfig& config, std::ostream& log) {
  if (config.n_trials < 2) throw ConfigError("field 'n_trials': coverage needs at least 2 trials");
  TabularMDP mdp = make_mdp(config);
  Target target = target_for(mdp, config);

  std::vector<std::int64_t> checkpoints = config.T_checkpoints;
  if (checkpoints.empty()) {
    for (auto t : log_checkpoints(config.T, 4)) {
      if (t >= 10) checkpoints.push_back(t);
    }
  }
  std::vector<Index> coords;
  if (config.all_coordinates) {
    for (Index i = 0; i < mdp.n_pairs(); ++i) coords.push_back(i);
  } else {
    coords.push_back(0);
  }
  const double warmup = config.warmup_or(0.05);
  RunConfig run = base_run(config);
  run.horizon = checkpoints.back();

  struct Trial {
    std::vector<double> covered, length;
  };
  auto trials = run_indexed(static_cast<std::size_t>(config.n_trials), config.threads, [&](std::size_t i) {
    CheckpointCoverage obs(checkpoints, warmup, target.center, coords, config.level,
                           config.critical_value);
    TrajectoryObserver* observers[] = {&obs};
    RunConfig cfg = run;
    cfg.seed = derive_seed(config.master_seed, i);
    run_trajectory(mdp, cfg, observers);
    return Trial{std::move(obs.covered_), std::move(obs.length_)};
  });

  std::vector<CoverageRow> rows;
  const auto n = static_cast<double>(config.n_trials);
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    for (std::size_t c = 0; c < coords.size(); ++c) {
      double covered = 0.0, length = 0.0;
      for (const auto& tr : trials) {
        covered += tr.covered[k * coords.size() + c];
        length += tr.length[k * coords.size() + c];
      }
      rows.push_back({checkpoints[k], coords[c], covered / n, length / n, config.n_trials});
    }
  }

  OutputDir out(config.output_dir);
  out.write("coverage.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"T_checkpoint", "coord_index", "coverage_rate", "mean_ci_length", "n_trials"});
    for (const auto& r : rows) csv.row(r.T, r.coord, r.coverage_rate, r.mean_ci_length, r.n_trials);
    return csv.rows();
  });
  out.finish(config);

  for (const auto& r : rows) {
    log << "T=" << r.T << " coord=" << r.coord << " coverage=" << fmt(r.coverage_rate)
        << " mean_length=" << fmt(r.mean_ci_length) << '\n';
  }
  return rows;
}

ComplexityReport cmd_complexity(const ExperimentConfig& config, std::ostream& log) {
  if (config.gamma_sweep.empty()) throw ConfigError("field 'gamma_sweep': complexity needs a discount sweep");
  const TabularMDP base = make_mdp(config);
  const auto checkpoints = log_checkpoints(config.T, config.checkpoints_per_decade);
  RunConfig run = base_run(config);
  run.warmup_fraction = config.warmup_or(0.0);

  ComplexityReport report;
  std::vector<std::vector<double>> curves;
  for (double gamma : config.gamma_sweep) {
    TabularMDP mdp = base.with_gamma(gamma);
    Target target = target_for(mdp, config);
    // Every discount reuses the same trial seeds (common random numbers).
    auto trials = run_indexed(static_cast<std::size_t>(config.n_trials), config.threads, [&](std::size_t i) {
      ErrorCurveRecorder rec(target.center, checkpoints);
      TrajectoryObserver* observers[] = {&rec};
      RunConfig cfg = run;
      cfg.seed = derive_seed(config.master_seed, i);
      run_trajectory(mdp, cfg, observers);
      std::vector<double> errs;
      errs.reserve(rec.points().size());
      for (const auto& p : rec.points()) errs.push_back(p.linf_error_avg);
      return errs;
    });
    std::vector<double> mean(checkpoints.size(), 0.0);
    for (const auto& tr : trials) {
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += tr[k];
    }
    for (auto& m : mean) m /= static_cast<double>(config.n_trials);

    ComplexityRow row;
    row.gamma = gamma;
    row.var_q_diag_inf = target.var_diag.cwiseAbs().maxCoeff();
    row.inv_one_minus_gamma = 1.0 / (1.0 - gamma);
    long k = first_persistent_crossing(mean, config.epsilon);
    row.censored = k < 0;
    row.T_eps = row.censored ? -1 : checkpoints[static_cast<std::size_t>(k)];
    report.rows.push_back(row);
    curves.push_back(std::move(mean));
    log << "gamma=" << fmt(gamma) << " ||diag Var_Q||_inf=" << fmt(row.var_q_diag_inf)
        << " T(eps)=" << (row.censored ? std::string("censored") : std::to_string(row.T_eps)) << '\n';
  }

  std::vector<double> var_x, horizon_x, t_y;
  for (const auto& r : report.rows) {
    if (r.censored) continue;
    var_x.push_back(r.var_q_diag_inf);
    horizon_x.push_back(r.inv_one_minus_gamma);
    t_y.push_back(static_cast<double>(r.T_eps));
  }
  const bool can_fit = t_y.size() >= 2;
  if (can_fit) {
    report.fit_var_q = fit_loglog(var_x, t_y);
    report.fit_horizon = fit_loglog(horizon_x, t_y);
  }

  OutputDir out(config.output_dir);
  out.write("complexity.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"gamma", "var_q_diag_inf", "inv_one_minus_gamma", "T_eps", "censored"});
    for (const auto& r : report.rows) {
      csv.row(r.gamma, r.var_q_diag_inf, r.inv_one_minus_gamma, r.T_eps, r.censored ? 1 : 0);
    }
    return csv.rows();
  });
  out.write("complexity_curves.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"gamma", "t", "mean_linf_error_avg"});
    for (std::size_t g = 0; g < curves.size(); ++g) {
      for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        csv.row(config.gamma_sweep[g], checkpoints[k], curves[g][k]);
      }
    }
    return csv.rows();
  });
  out.write("slopes.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"x", "slope", "intercept", "n_points"});
    if (can_fit) {
      csv.row("var_q_diag_inf", report.fit_var_q.slope, report.fit_var_q.intercept,
              report.fit_var_q.n_points);
      csv.row("inv_one_minus_gamma", report.fit_horizon.slope, report.fit_horizon.intercept,
              report.fit_horizon.n_points);
    }
    return csv.rows();
  });
  out.finish(config);

  if (can_fit) {
    log << "slope vs ||diag Var_Q||_inf: " << fmt(report.fit_var_q.slope) << '\n';
    log << "slope vs 1/(1-gamma): " << fmt(report.fit_horizon.slope) << '\n';
  } else {
    log << "fewer than two uncensored discounts; no slope fitted\n";
  }
  return report;
}

QuantileTable cmd_quantiles(const ExperimentConfig& config, std::ostream& log) {
  const auto& q = config.quantiles;
  QuantileTable table = simulate_pivotal_quantiles(q.dim, q.grid_size, q.n_sims, q.levels,
                                                   config.master_seed, config.threads);
  const auto& values = q.dim == 1 ? table.t_abs : table.pivotal;
  OutputDir out(config.output_dir);
  out.write("quantiles.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"dim", "level", "quantile", "n_sims", "grid_size", "seed"});
    for (std::size_t i = 0; i < table.levels.size(); ++i) {
      csv.row(table.dim, table.levels[i], values[i], table.n_sims, table.grid_size, table.seed);
    }
    return csv.rows();
  });
  out.finish(config);
  for (std::size_t i = 0; i < table.levels.size(); ++i) {
    log << "level " << fmt(table.levels[i]) << ": " << fmt(values[i]) << '\n';
  }
  if (q.dim == 1) log << "median of t: " << fmt(table.t_median) << '\n';
  return table;
}

DiagnoseReport cmd_diagnose(const ExperimentConfig& config, std::ostream& log) {
  TabularMDP mdp = make_mdp(config);
  SolveResult sol = solve(mdp);
  const Matrix p_pi = policy_transition(mdp, sol.pi_star).pairs;
  const auto& dg = config.diagnose;
  auto wants = [&](const char* name) {
    return std::find(dg.checks.begin(), dg.checks.end(), name) != dg.checks.end();
  };

  DiagnoseReport report;
  OutputDir out(config.output_dir);

  if (wants("ajt")) {
    auto pairs = dg.ajt_pairs;
    if (pairs.empty()) {
      for (auto T : dg.T_values) {
        for (std::int64_t j : {std::int64_t{0}, std::int64_t{1}, T / 2, T}) {
          if (pairs.empty() || pairs.back() != std::make_pair(j, T)) pairs.emplace_back(j, T);
        }
      }
    }
    for (auto [j, T] : pairs) {
      double norm = linf(ajt_matrix(config.schedule, mdp.gamma(), p_pi, j, T));
      report.ajt.push_back({j, T, norm});
      log << "||A_" << j << "^" << T << "||_inf = " << fmt(norm);
      if (j == T) log << " (eta_T = " << fmt(config.schedule(T, mdp.gamma())) << ")";
      log << '\n';
    }
    out.write("ajt.csv", [&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"j", "T", "ajt_inf_norm"});
      for (const auto& r : report.ajt) csv.row(r.j, r.T, r.norm);
      return csv.rows();
    });
  }

  if (wants("uniform_approx")) {
    for (auto T : dg.T_values) {
      double m = uniform_approx_metric(config.schedule, mdp.gamma(), p_pi, T);
      report.uniform_approx.push_back({T, m});
      log << "uniform approximation metric T=" << T << ": " << fmt(m) << '\n';
    }
    out.write("uniform_approx.csv", [&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"T", "uniform_approx_metric"});
      for (const auto& r : report.uniform_approx) csv.row(r.T, r.metric);
      return csv.rows();
    });
  }

  if (wants("clt")) {
    report.clt = clt_check(mdp, sol, config.schedule, config.T, config.n_trials, config.master_seed,
                           config.warmup_or(0.0), config.threads);
    const auto& clt = *report.clt;
    out.write("clt.csv", [&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"coord", "std", "coverage_196"});
      for (std::size_t c = 0; c < clt.std.size(); ++c) {
        if (clt.skipped[c]) {
          csv.row(c, "", "");
        } else {
          csv.row(c, clt.std[c], clt.coverage_196[c]);
        }
      }
      return csv.rows();
    });
    for (std::size_t c = 0; c < clt.std.size(); ++c) {
      if (clt.skipped[c]) {
        log << "coord " << c << ": skipped (zero asymptotic variance), raw rms "
            << fmt(clt.raw_rms[c]) << '\n';
      } else {
        log << "coord " << c << ": mean " << fmt(clt.mean[c]) << " std " << fmt(clt.std[c])
            << " coverage(1.96) " << fmt(clt.coverage_196[c]) << '\n';
      }
    }
  }

  if (wants("entropy_bias")) {
    report.entropy_bias = entropy_bias_check(mdp, dg.lambdas, dg.entropy_tol);
    out.write("entropy_bias.csv", [&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"lambda", "bias", "bound"});
      for (const auto& r : report.entropy_bias) csv.row(r.lambda, r.bias, r.bound);
      return csv.rows();
    });
    for (const auto& r : report.entropy_bias) {
      log << "lambda " << fmt(r.lambda) << ": bias " << fmt(r.bias) << " bound " << fmt(r.bound)
          << (r.within ? "" : "  VIOLATED") << '\n';
    }
  }

  out.finish(config);
  return report;
}

bool run_command(const std::string& name, const ExperimentConfig& config, std::ostream& log) {
  if (name == "solve") {
    cmd_solve(config, log);
  } else if (name == "train") {
    cmd_train(config, log);
  } else if (name == "coverage") {
    cmd_coverage(config, log);
  } else if (name == "complexity") {
    cmd_complexity(config, log);
  } else if (name == "quantiles") {
    cmd_quantiles(config, log);
  } else if (name == "diagnose") {
    cmd_diagnose(config, log);
  } else {
    return false;
  }
  return true;
}

}  // namespace qavg::cli
