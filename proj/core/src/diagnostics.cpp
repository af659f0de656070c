#include "qavg/diagnostics.hpp"

#include "qavg/error.hpp"
#include "qavg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qavg {

PartialSumPath partial_sum_path(const PartialSumRecord& record, const Vector& q_star,
                                const std::vector<double>& grid) {
  if (record.horizon < 1) throw StateError("no iterates were recorded");
  PartialSumPath path;
  path.T = record.horizon;
  path.q_star = q_star;
  path.grid = grid;
  const double T = static_cast<double>(record.horizon);
  const double scale = 1.0 / std::sqrt(T);
  for (double r : grid) {
    if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("grid points must lie in [0, 1]");
    const auto k = static_cast<std::int64_t>(std::floor(T * r));
    if (k == 0) {
      path.values.push_back(Vector::Zero(q_star.size()));
      continue;
    }
    auto it = record.sums.find(k);
    if (it == record.sums.end()) {
      throw StateError("partial sum at t = " + std::to_string(k) + " was not recorded");
    }
    if (it->second.size() != q_star.size()) throw ShapeError("Q* length does not match iterates");
    path.values.push_back(scale * (it->second - static_cast<double>(k) * q_star));
  }
  return path;
}

namespace {

void check_ajt_args(const Matrix& p, std::int64_t j, std::int64_t T) {
  if (p.rows() != p.cols()) throw ShapeError("P_pi must be square");
  if (j < 0 || j > T) throw ParameterError("need 0 <= j <= T");
}

}  // namespace

Matrix ajt_matrix(const StepSchedule& schedule, double gamma, const Matrix& p_pi_star,
                  std::int64_t j, std::int64_t T) {
  check_ajt_args(p_pi_star, j, T);
  const Index d = p_pi_star.rows();
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix g = eye - gamma * p_pi_star;
  Matrix product = eye;
  Matrix sum = eye;
  for (std::int64_t t = j + 1; t <= T; ++t) {
    product = (eye - schedule(t, gamma) * g) * product;
    sum += product;
  }
  return schedule(j, gamma) * sum;
}

std::vector<Matrix> ajt_matrices(const StepSchedule& schedule, double gamma,
                                 const Matrix& p_pi_star, std::int64_t T) {
  check_ajt_args(p_pi_star, 1, T);
  const Index d = p_pi_star.rows();
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix g = eye - gamma * p_pi_star;
  std::vector<Matrix> out(static_cast<std::size_t>(T));
  Matrix b = eye;  // B_T
  out[static_cast<std::size_t>(T - 1)] = schedule(T, gamma) * b;
  for (std::int64_t j = T - 1; j >= 1; --j) {
    b = eye + (eye - schedule(j + 1, gamma) * g) * b;
    out[static_cast<std::size_t>(j - 1)] = schedule(j, gamma) * b;
  }
  return out;
}

double uniform_approx_metric(const StepSchedule& schedule, double gamma, const Matrix& p_pi_star,
                             std::int64_t T) {
  if (T < 1) throw ParameterError("T must be at least 1");
  const Index d = p_pi_star.rows();
  const Matrix g = Matrix::Identity(d, d) - gamma * p_pi_star;
  const Matrix g_inv = g.partialPivLu().inverse();
  double total = 0.0;
  for (const Matrix& a : ajt_matrices(schedule, gamma, p_pi_star, T)) {
    const double n = linf(Matrix(a - g_inv));
    total += n * n;
  }
  return total / static_cast<double>(T);
}

std::optional<double> ajt_norm_bound(const StepSchedule& schedule, double gamma, std::int64_t T) {
  if (schedule.kind != StepSchedule::Kind::linear_rescaled) return std::nullopt;
  return std::log(1.0 + (1.0 - gamma) * static_cast<double>(T)) / (1.0 - gamma);
}

double ajt_majorant(const StepSchedule& schedule, double gamma, std::int64_t T) {
  if (T < 1) throw ParameterError("T must be at least 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in [0, 1)");
  double m = 1.0;
  double worst = schedule(T, gamma);
  for (std::int64_t j = T - 1; j >= 1; --j) {
    m = 1.0 + (1.0 - schedule(j + 1, gamma) * (1.0 - gamma)) * m;
    worst = std::max(worst, schedule(j, gamma) * m);
  }
  return worst;
}

CltSummary clt_check(const TabularMDP& mdp, const SolveResult& solution,
                     const StepSchedule& schedule, std::int64_t T, long n_trials,
                     std::uint64_t seed, double warmup_fraction, unsigned threads) {
  if (n_trials < 1) throw ParameterError("need at least one trial");
  const Index d = mdp.n_pairs();
  if (solution.q_star.size() != d) throw ShapeError("solution does not match the MDP");

  RunConfig config;
  config.schedule = schedule;
  config.horizon = T;
  config.warmup_fraction = warmup_fraction;

  struct TrialResult {
    Vector scaled_error;
    std::int64_t n = 0;
  };
  auto trials = run_indexed(static_cast<std::size_t>(n_trials), threads, [&](std::size_t i) {
    RunConfig cfg = config;
    cfg.seed = derive_seed(seed, i);
    RunState state = run_trajectory(mdp, cfg);
    const double root_n = std::sqrt(static_cast<double>(state.n_averaged));
    return TrialResult{root_n * (state.q_bar - solution.q_star), state.n_averaged};
  });

  CltSummary out;
  out.T = T;
  out.n_trials = n_trials;
  out.n_averaged = trials.front().n;
  const auto n = static_cast<double>(n_trials);
  for (Index c = 0; c < d; ++c) {
    double raw_sq = 0.0;
    for (const auto& tr : trials) raw_sq += tr.scaled_error(c) * tr.scaled_error(c);
    out.raw_rms.push_back(std::sqrt(raw_sq / n));

    const double var = solution.var_q(c, c);
    if (!(var >= 1e-14)) {
      out.skipped.push_back(true);
      out.mean.push_back(std::numeric_limits<double>::quiet_NaN());
      out.std.push_back(std::numeric_limits<double>::quiet_NaN());
      out.coverage_196.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double sd = std::sqrt(var);
    double sum = 0.0;
    double inside = 0.0;
    for (const auto& tr : trials) {
      double z = tr.scaled_error(c) / sd;
      sum += z;
      if (std::abs(z) <= 1.96) inside += 1.0;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& tr : trials) {
      double z = tr.scaled_error(c) / sd - mean;
      ss += z * z;
    }
    out.skipped.push_back(false);
    out.mean.push_back(mean);
    out.std.push_back(n_trials > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
    out.coverage_196.push_back(inside / n);
  }
  return out;
}

std::vector<EntropyBiasRow> entropy_bias_check(const TabularMDP& mdp,
                                               const std::vector<double>& lambdas, double tol) {
  const SolveResult hard = solve(mdp);
  std::vector<EntropyBiasRow> rows;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    RegularizedSolveResult soft = regularized_fixed_point(mdp, lambda);
    const double bias = linf(Vector(hard.q_star - soft.q_lambda));
    const double bound =
        lambda * std::log(static_cast<double>(mdp.n_actions())) / (1.0 - mdp.gamma());
    rows.push_back({lambda, bias, bound, bias <= bound + tol});
  }
  return rows;
}

}  // namespace qavg
