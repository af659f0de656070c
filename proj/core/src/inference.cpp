#include "qavg/inference.hpp"

#include "qavg/error.hpp"
#include "qavg/parallel.hpp"
#include "qavg/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qavg {

RsAccumulator::RsAccumulator(Index dim, CovarianceMode mode)
    : mode_(mode),
      partial_sum_(Vector::Zero(dim)),
      sum_weighted_(Vector::Zero(dim)) {
  if (dim < 1) throw ParameterError("accumulator dimension must be positive");
  if (mode_ == CovarianceMode::full) {
    sum_outer_ = Matrix::Zero(dim, dim);
  } else {
    sum_sq_ = Vector::Zero(dim);
  }
}

void RsAccumulator::update(const Vector& q) {
  if (q.size() != dim()) throw ShapeError("iterate length does not match accumulator");
  ++count_;
  const double t = static_cast<double>(count_);
  partial_sum_ += q;
  if (mode_ == CovarianceMode::full) {
    sum_outer_.selfadjointView<Eigen::Lower>().rankUpdate(partial_sum_);
  } else {
    sum_sq_ += partial_sum_.cwiseAbs2();
  }
  sum_weighted_ += t * partial_sum_;
  sum_t2_ += t * t;
}

Matrix RsAccumulator::sum_outer() const {
  if (mode_ != CovarianceMode::full) throw StateError("outer-product sum needs full mode");
  // only the lower triangle is accumulated
  return sum_outer_.selfadjointView<Eigen::Lower>();
}

Vector RsAccumulator::sum_squares() const {
  if (mode_ == CovarianceMode::full) return sum_outer_.diagonal();
  return sum_sq_;
}

Vector RsAccumulator::mean() const {
  if (count_ == 0) throw StateError("accumulator is empty");
  return partial_sum_ / static_cast<double>(count_);
}

Matrix RsAccumulator::covariance() const {
  if (mode_ != CovarianceMode::full) throw StateError("full covariance needs full mode");
  if (count_ == 0) throw StateError("accumulator is empty");
  const double T = static_cast<double>(count_);
  Matrix outer = sum_outer_.selfadjointView<Eigen::Lower>();
  Matrix cross = sum_weighted_ * partial_sum_.transpose();
  Matrix w = outer - (cross + cross.transpose()) / T +
             (sum_t2_ / (T * T)) * (partial_sum_ * partial_sum_.transpose());
  w /= T * T;
  return 0.5 * (w + w.transpose());
}

Vector RsAccumulator::covariance_diagonal() const {
  if (count_ == 0) throw StateError("accumulator is empty");
  const double T = static_cast<double>(count_);
  Vector w = sum_squares() - 2.0 * sum_weighted_.cwiseProduct(partial_sum_) / T +
             (sum_t2_ / (T * T)) * partial_sum_.cwiseAbs2();
  return (w / (T * T)).cwiseMax(0.0);
}

std::optional<double> builtin_critical_value(double level) {
  // 0.95 is the established value; 0.90 and 0.99 were frozen from
  // simulate_pivotal_quantiles(1, 1000, 1000000, ..., seed 20240601).
  struct Entry {
    double level, value;
  };
  static constexpr Entry table[] = {{0.90, 5.325}, {0.95, 6.753}, {0.99, 9.995}};
  for (const auto& e : table) {
    if (std::abs(e.level - level) < 1e-12) return e.value;
  }
  return std::nullopt;
}

ConfidenceReport confidence_interval(const Vector& q_bar, const Vector& w_diag, std::int64_t T,
                                     double level, std::optional<double> critical_value) {
  if (q_bar.size() != w_diag.size()) throw ShapeError("center and W diagonal lengths differ");
  if (T < 1) throw ParameterError("need at least one averaged iterate");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("level must lie in (0, 1)");
  double c = 0.0;
  if (critical_value) {
    if (!(*critical_value >= 0.0)) throw ParameterError("critical value must be nonnegative");
    c = *critical_value;
  } else if (auto builtin = builtin_critical_value(level)) {
    c = *builtin;
  } else {
    throw ParameterError("no built-in critical value for this level; supply one");
  }
  ConfidenceReport report;
  report.center = q_bar;
  report.level = level;
  report.critical_value = c;
  report.n_averaged = T;
  report.halfwidth = c * (w_diag.cwiseMax(0.0) / static_cast<double>(T)).cwiseSqrt();
  return report;
}

double pivotal_statistic(const Vector& q_bar, const Matrix& w_full, std::int64_t T,
                         const Vector& q_hypothesis) {
  const Index d = q_bar.size();
  if (q_hypothesis.size() != d || w_full.rows() != d || w_full.cols() != d) {
    throw ShapeError("pivotal statistic inputs have mismatched dimensions");
  }
  if (T < 1) throw ParameterError("need at least one averaged iterate");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w_full);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of W failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw DegeneracyError(
        "random-scaling matrix is numerically singular; run more iterations");
  }
  Vector v = std::sqrt(static_cast<double>(T)) * (q_bar - q_hypothesis);
  Vector coeffs = eig.eigenvectors().transpose() * v;
  double stat = (coeffs.cwiseAbs2().array() / eig.eigenvalues().array()).sum();
  return std::max(stat, 0.0);
}

double sorted_quantile(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw StateError("no samples");
  if (!(level >= 0.0 && level <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

struct SimDraw {
  double pivotal = 0.0;
  double t = 0.0;
};

SimDraw simulate_scalar(Index grid_size, RandomStream& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid_size));
  const double n = static_cast<double>(grid_size);
  double b = 0.0, sq = 0.0, weighted = 0.0, k2 = 0.0;
  for (Index k = 1; k <= grid_size; ++k) {
    b += scale * rng.normal();
    sq += b * b;
    const double kd = static_cast<double>(k);
    weighted += kd * b;
    k2 += kd * kd;
  }
  const double w = std::max((sq - 2.0 * weighted * b / n + (k2 / (n * n)) * b * b) / n, 0.0);
  SimDraw out;
  out.t = b / std::sqrt(w);
  out.pivotal = out.t * out.t;
  return out;
}

SimDraw simulate_one(Index dim, Index grid_size, RandomStream& rng) {
  if (dim == 1) return simulate_scalar(grid_size, rng);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid_size));
  const double n = static_cast<double>(grid_size);
  // Brownian path B(k/n), k = 1..n, then the same moment sums the online
  // accumulator keeps: sum B, sum B B^T, sum k B.
  Vector b = Vector::Zero(dim);
  Matrix outer = Matrix::Zero(dim, dim);
  Vector weighted = Vector::Zero(dim);
  double k2 = 0.0;
  for (Index k = 1; k <= grid_size; ++k) {
    for (Index i = 0; i < dim; ++i) b(i) += scale * rng.normal();
    outer.selfadjointView<Eigen::Lower>().rankUpdate(b);
    weighted += static_cast<double>(k) * b;
    k2 += static_cast<double>(k) * static_cast<double>(k);
  }
  outer = Matrix(outer.selfadjointView<Eigen::Lower>());
  Matrix cross = weighted * b.transpose();
  Matrix w = (outer - (cross + cross.transpose()) / n + (k2 / (n * n)) * (b * b.transpose())) / n;
  w = 0.5 * (w + w.transpose());

  SimDraw out;
  out.pivotal = b.dot(w.ldlt().solve(b));
  return out;
}

}  // namespace

QuantileTable simulate_pivotal_quantiles(Index dim, Index grid_size, long n_sims,
                                         const std::vector<double>& levels, std::uint64_t seed,
                                         unsigned threads) {
  if (dim < 1) throw ParameterError("dimension must be positive");
  if (grid_size < 100) throw ParameterError("grid size must be at least 100");
  if (n_sims < 10000) throw ParameterError("need at least 10^4 simulations");
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ParameterError("levels must lie in (0, 1)");
  }

  // Chunks of simulations share nothing but the seed derivation rule.
  constexpr long kChunk = 1000;
  const long n_chunks = (n_sims + kChunk - 1) / kChunk;
  auto chunks = run_indexed(static_cast<std::size_t>(n_chunks), threads, [&](std::size_t c) {
    std::vector<SimDraw> draws;
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(n_sims, begin + kChunk);
    draws.reserve(static_cast<std::size_t>(end - begin));
    for (long i = begin; i < end; ++i) {
      RandomStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      draws.push_back(simulate_one(dim, grid_size, rng));
    }
    return draws;
  });

  std::vector<double> pivotal;
  std::vector<double> t_abs;
  std::vector<double> t_signed;
  pivotal.reserve(static_cast<std::size_t>(n_sims));
  for (const auto& chunk : chunks) {
    for (const auto& d : chunk) {
      pivotal.push_back(d.pivotal);
      if (dim == 1) {
        t_abs.push_back(std::abs(d.t));
        t_signed.push_back(d.t);
      }
    }
  }
  std::sort(pivotal.begin(), pivotal.end());
  std::sort(t_abs.begin(), t_abs.end());
  std::sort(t_signed.begin(), t_signed.end());

  QuantileTable table;
  table.dim = dim;
  table.grid_size = grid_size;
  table.n_sims = n_sims;
  table.seed = seed;
  table.levels = levels;
  for (double l : levels) {
    table.pivotal.push_back(sorted_quantile(pivotal, l));
    if (dim == 1) table.t_abs.push_back(sorted_quantile(t_abs, l));
  }
  if (dim == 1) table.t_median = sorted_quantile(t_signed, 0.5);
  return table;
}

}  // namespace qavg
