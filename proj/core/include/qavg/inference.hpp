#pragma once

#include "qavg/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qavg {

enum class CovarianceMode { diagonal, full };

/**
 * Online sufficient statistics for the random-scaling matrix
 *
 *   W_T = (1/T^2) sum_{t=1}^T (S_t - (t/T) S_T)(S_t - (t/T) S_T)^T,
 *
 * where S_t is the partial sum of the first t iterates fed in. The unknown
 * optimum cancels inside S_t - (t/T) S_T, so W_T needs only the iterates.
 * Diagonal mode keeps O(D) state; full mode keeps the D x D sum of outer
 * products and is required for the multivariate pivotal statistic.
 */
class RsAccumulator {
 public:
  RsAccumulator(Index dim, CovarianceMode mode);

  /// Adds one iterate Q_t. O(D) work in diagonal mode, O(D^2) in full mode.
  void update(const Vector& q);

  Index dim() const { return partial_sum_.size(); }
  CovarianceMode mode() const { return mode_; }
  std::int64_t count() const { return count_; }

  const Vector& partial_sum() const { return partial_sum_; }
  /// sum_t S_t S_t^T; only valid in full mode.
  Matrix sum_outer() const;
  /// sum_t S_t(i)^2 (the diagonal of sum_outer in full mode).
  Vector sum_squares() const;
  const Vector& sum_weighted() const { return sum_weighted_; }  ///< sum_t t S_t
  double sum_t2() const { return sum_t2_; }

  /// Arithmetic mean of the iterates seen so far.
  Vector mean() const;

  /// Full W_T; requires full mode and count >= 1 (StateError otherwise).
  Matrix covariance() const;
  /// Diagonal of W_T; available in both modes.
  Vector covariance_diagonal() const;

 private:
  CovarianceMode mode_;
  std::int64_t count_ = 0;
  Vector partial_sum_;
  Matrix sum_outer_;
  Vector sum_sq_;
  Vector sum_weighted_;
  double sum_t2_ = 0.0;
};

/// Two-sided critical values of the random-scaling t statistic
/// |B(1)| / sqrt(int_0^1 (B(r) - r B(1))^2 dr) for the built-in levels
/// 0.90, 0.95 and 0.99. Returns nullopt for any other level.
std::optional<double> builtin_critical_value(double level);

struct ConfidenceReport {
  Vector center;
  Vector halfwidth;
  double level = 0.95;
  double critical_value = 0.0;
  std::int64_t n_averaged = 0;  ///< T, the number of iterates behind the estimate
  std::int64_t warmup = 0;      ///< iterations discarded before averaging

  Vector lower() const { return center - halfwidth; }
  Vector upper() const { return center + halfwidth; }
  bool covers(Index i, double value) const {
    return value >= center(i) - halfwidth(i) && value <= center(i) + halfwidth(i);
  }
};

/// center +/- c * sqrt(w_diag / T). Throws ParameterError for levels outside
/// the built-in table unless `critical_value` is supplied.
ConfidenceReport confidence_interval(const Vector& q_bar, const Vector& w_diag, std::int64_t T,
                                     double level,
                                     std::optional<double> critical_value = std::nullopt);

/// v^T W^{-1} v with v = sqrt(T) (q_bar - q_hypothesis). Throws
/// DegeneracyError if W is not positive definite or its condition number
/// exceeds 1e12.
double pivotal_statistic(const Vector& q_bar, const Matrix& w_full, std::int64_t T,
                         const Vector& q_hypothesis);

struct QuantileTable {
  Index dim = 1;
  Index grid_size = 0;
  long n_sims = 0;
  std::uint64_t seed = 0;
  std::vector<double> levels;
  /// Quantiles of B(1)^T (int Bbar Bbar^T)^{-1} B(1) at each level.
  std::vector<double> pivotal;
  /// dim == 1 only: quantiles of |t| (two-sided critical values).
  std::vector<double> t_abs;
  /// dim == 1 only: median of the signed t statistic.
  double t_median = 0.0;
};

/// Monte Carlo quantiles of the limiting pivotal law. Brownian paths are
/// simulated on a uniform grid with N(0, 1/grid_size) increments and the
/// integral is the left-point Riemann sum over r = k / grid_size, matching
/// the online accumulator. Simulation i uses derive_seed(seed, i), so the
/// result does not depend on `threads`.
QuantileTable simulate_pivotal_quantiles(Index dim, Index grid_size, long n_sims,
                                         const std::vector<double>& levels, std::uint64_t seed,
                                         unsigned threads = 1);

/// Linear-interpolation empirical quantile (type 7) of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double level);

}  // namespace qavg
