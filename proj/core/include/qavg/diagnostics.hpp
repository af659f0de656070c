#pragma once

#include "qavg/exact.hpp"
#include "qavg/mdp.hpp"
#include "qavg/observers.hpp"
#include "qavg/sa.hpp"
#include "qavg/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qavg {

/// phi_T(r) = T^{-1/2} sum_{t=1}^{floor(T r)} (Q_t - Q*) on a grid of r.
struct PartialSumPath {
  std::vector<double> grid;
  std::vector<Vector> values;
  std::int64_t T = 0;
  Vector q_star;
};

/// Throws StateError when a grid point needs a partial sum that was not
/// recorded, ParameterError for r outside [0, 1].
PartialSumPath partial_sum_path(const PartialSumRecord& record, const Vector& q_star,
                                const std::vector<double>& grid);

/// A_j^T = eta_j sum_{t=j}^T prod_{i=j+1}^t (I - eta_i G), G = I - gamma P_pi,
/// evaluated by accumulating the product forward in t.
Matrix ajt_matrix(const StepSchedule& schedule, double gamma, const Matrix& p_pi_star,
                  std::int64_t j, std::int64_t T);

/// All of A_1^T .. A_T^T by the backward recursion
/// B_T = I, B_j = I + (I - eta_{j+1} G) B_{j+1}, A_j^T = eta_j B_j.
/// Index k of the result holds A_{k+1}^T.
std::vector<Matrix> ajt_matrices(const StepSchedule& schedule, double gamma,
                                 const Matrix& p_pi_star, std::int64_t T);

/// (1/T) sum_{j=1}^T ||A_j^T - G^{-1}||_inf^2.
double uniform_approx_metric(const StepSchedule& schedule, double gamma, const Matrix& p_pi_star,
                             std::int64_t T);

/// Closed-form bound on ||A_j^T||_inf where one exists: ln(1 + (1-gamma)T)/(1-gamma)
/// for the linearly rescaled schedule. The polynomial bound carries an
/// unspecified constant, so it returns nullopt there; use
/// ajt_majorant instead.
std::optional<double> ajt_norm_bound(const StepSchedule& schedule, double gamma, std::int64_t T);

/// max_j eta_j sum_{t=j}^T prod_{i=j+1}^t (1 - eta_i (1-gamma)). Bounds
/// ||A_j^T||_inf for every j and every row-stochastic P, since I - eta G is
/// nonnegative with row sums 1 - eta (1-gamma) when eta <= 1. Nondecreasing in T.
double ajt_majorant(const StepSchedule& schedule, double gamma, std::int64_t T);

/// Upper bound on the linear-rescaled uniform-approximation metric: 25 / (1 - gamma)^2.
inline double linear_rescaled_metric_bound(double gamma) {
  return 25.0 / ((1.0 - gamma) * (1.0 - gamma));
}

struct CltSummary {
  std::int64_t T = 0;
  std::int64_t n_averaged = 0;
  long n_trials = 0;
  /// Per coordinate; entries are NaN where `skipped` is set.
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> coverage_196;
  std::vector<bool> skipped;
  /// Root mean square of the unstandardized sqrt(n) (Qbar - Q*) per coordinate.
  std::vector<double> raw_rms;
};

/// Standardizes sqrt(n) (Qbar_T - Q*) by sqrt(diag Var_Q) over independent
/// trials, n being the number of averaged iterates. Coordinates with
/// Var_Q < 1e-14 are skipped. Trial i uses derive_seed(seed, i).
CltSummary clt_check(const TabularMDP& mdp, const SolveResult& solution,
                     const StepSchedule& schedule, std::int64_t T, long n_trials,
                     std::uint64_t seed, double warmup_fraction = 0.0, unsigned threads = 1);

struct EntropyBiasRow {
  double lambda;
  double bias;   ///< ||Q* - Q*_lambda||_inf
  double bound;  ///< lambda ln A / (1 - gamma)
  bool within;   ///< bias <= bound + tol
};

std::vector<EntropyBiasRow> entropy_bias_check(const TabularMDP& mdp,
                                               const std::vector<double>& lambdas, double tol);

}  // namespace qavg
