#include "doctest.h"
#include "oracles.hpp"

#include "qavg/error.hpp"
#include "qavg/inference.hpp"
#include "qavg/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace qavg;

namespace {

std::vector<std::vector<double>> random_walk(RandomStream& rng, Index d, int T, double drift) {
  std::vector<std::vector<double>> out;
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  for (int t = 0; t < T; ++t) {
    for (auto& v : x) v = 0.9 * v + drift + rng.normal();
    out.push_back(x);
  }
  return out;
}

RsAccumulator feed(const std::vector<std::vector<double>>& iterates, CovarianceMode mode,
                   double scale = 1.0, double shift = 0.0) {
  const auto d = static_cast<Index>(iterates[0].size());
  RsAccumulator acc(d, mode);
  for (const auto& q : iterates) {
    Vector v = Eigen::Map<const Vector>(q.data(), d) * scale;
    v.array() += shift;
    acc.update(v);
  }
  return acc;
}

}  // namespace

TEST_CASE("accumulator bookkeeping") {
  RsAccumulator acc(3, CovarianceMode::full);
  acc.update(Vector::Constant(3, 2.0));
  CHECK(acc.count() == 1);
  CHECK(acc.partial_sum() == Vector::Constant(3, 2.0));
  CHECK(acc.sum_outer() == Matrix::Constant(3, 3, 4.0));
  CHECK(acc.sum_weighted() == Vector::Constant(3, 2.0));
  CHECK(acc.sum_t2() == 1.0);

  RsAccumulator zero(2, CovarianceMode::diagonal);
  for (int k = 0; k < 5; ++k) zero.update(Vector::Zero(2));
  CHECK(zero.partial_sum().isZero(0.0));
  CHECK(zero.sum_squares().isZero(0.0));
  CHECK(zero.sum_weighted().isZero(0.0));
  CHECK(zero.sum_t2() == 55.0);
  CHECK_THROWS_AS(zero.sum_outer(), StateError);

  RsAccumulator scalar(1, CovarianceMode::full);
  scalar.update(Vector::Zero(1));
  scalar.update(Vector::Ones(1));
  CHECK(scalar.partial_sum()(0) == 1.0);
  CHECK(scalar.sum_outer()(0, 0) == 1.0);
  CHECK(scalar.sum_weighted()(0) == 2.0);
  CHECK(scalar.sum_t2() == 5.0);
  CHECK(scalar.covariance()(0, 0) == 0.0625);
  CHECK(scalar.covariance_diagonal()(0) == 0.0625);
  CHECK_THROWS_AS(scalar.update(Vector::Zero(2)), ShapeError);
}

TEST_CASE("empty accumulator refuses to produce W") {
  RsAccumulator acc(2, CovarianceMode::full);
  CHECK_THROWS_AS(acc.covariance(), StateError);
  CHECK_THROWS_AS(acc.covariance_diagonal(), StateError);
  CHECK_THROWS_AS(RsAccumulator(2, CovarianceMode::diagonal).covariance(), StateError);
  CHECK_THROWS_AS(RsAccumulator(0, CovarianceMode::full), ParameterError);
}

TEST_CASE("constant iterates cancel exactly") {
  RsAccumulator acc(3, CovarianceMode::full);
  Vector c(3);
  c << 0.5, -2.0, 7.0;
  for (int k = 0; k < 64; ++k) acc.update(c);
  CHECK(acc.covariance().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((acc.mean() - c).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("online W equals the two-pass evaluation") {
  RandomStream rng(2);
  for (Index d : {1, 3}) {
    for (int T : {10, 20, 100}) {
      for (int rep = 0; rep < 25; ++rep) {
        auto path = random_walk(rng, d, T, rng.uniform() * 3.0);
        auto expect = oracle::two_pass_w(path);
        auto full = feed(path, CovarianceMode::full).covariance();
        auto diag = feed(path, CovarianceMode::diagonal).covariance_diagonal();
        double scale = 0.0;
        for (const auto& row : expect)
          for (double x : row) scale = std::max(scale, std::abs(x));
        for (Index i = 0; i < d; ++i) {
          for (Index j = 0; j < d; ++j) {
            CHECK(std::abs(full(i, j) - expect[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) <=
                  1e-12 * scale);
          }
          CHECK(std::abs(diag(i) - expect[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]) <=
                1e-12 * scale);
        }
      }
    }
  }
}

TEST_CASE("W is symmetric and positive semidefinite") {
  RandomStream rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    auto w = feed(random_walk(rng, 5, 200, 1.0), CovarianceMode::full).covariance();
    CHECK(w == w.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(w);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * w.trace());
  }
}

TEST_CASE("shifting every iterate leaves W unchanged") {
  RandomStream rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    auto path = random_walk(rng, 3, 100, 0.0);
    auto base = feed(path, CovarianceMode::full);
    auto shifted = feed(path, CovarianceMode::full, 1.0, 4.25);
    double scale = base.covariance().cwiseAbs().maxCoeff();
    CHECK((base.covariance() - shifted.covariance()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK(((shifted.mean() - base.mean()).array() - 4.25).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("built-in critical values") {
  CHECK(builtin_critical_value(0.95) == 6.753);
  CHECK(builtin_critical_value(0.90).has_value());
  CHECK(builtin_critical_value(0.99).has_value());
  CHECK_FALSE(builtin_critical_value(0.8).has_value());
  CHECK(*builtin_critical_value(0.90) < 6.753);
  CHECK(*builtin_critical_value(0.99) > 6.753);
}

TEST_CASE("confidence intervals") {
  Vector center = Vector::Constant(1, 2.0);
  auto ci = confidence_interval(center, Vector::Constant(1, 0.04), 400, 0.95);
  CHECK(ci.halfwidth(0) == doctest::Approx(0.06753).epsilon(1e-12));
  CHECK(ci.critical_value == 6.753);
  CHECK(ci.lower()(0) == doctest::Approx(2.0 - 0.06753).epsilon(1e-12));
  CHECK(ci.covers(0, 2.05));
  CHECK_FALSE(ci.covers(0, 2.07));

  auto zero = confidence_interval(Vector::Constant(3, 1.5), Vector::Zero(3), 10, 0.99);
  CHECK(zero.halfwidth.isZero(0.0));
  CHECK(zero.lower() == zero.upper());

  CHECK_THROWS_AS(confidence_interval(center, Vector::Constant(1, 0.04), 400, 0.8), ParameterError);
  auto custom = confidence_interval(center, Vector::Constant(1, 0.04), 400, 0.8, 4.0);
  CHECK(custom.halfwidth(0) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS_AS(confidence_interval(center, Vector::Zero(2), 400, 0.95), ShapeError);
}

TEST_CASE("pivotal statistic") {
  RandomStream rng(7);
  auto path = random_walk(rng, 3, 200, 0.5);
  auto acc = feed(path, CovarianceMode::full);
  Matrix w = acc.covariance();
  Vector q_bar = acc.mean();
  CHECK(pivotal_statistic(q_bar, w, 200, q_bar) == 0.0);

  Vector h = q_bar;
  h(1) += 0.3;
  double stat = pivotal_statistic(q_bar, w, 200, h);
  Vector v = std::sqrt(200.0) * (q_bar - h);
  CHECK(stat == doctest::Approx(v.dot(w.ldlt().solve(v))).epsilon(1e-10));
  CHECK(stat >= 0.0);

  auto scaled = feed(path, CovarianceMode::full, 10.0);
  double stat10 = pivotal_statistic(scaled.mean(), scaled.covariance(), 200, Vector(10.0 * h));
  CHECK(stat10 == doctest::Approx(stat).epsilon(1e-9));

  Matrix scalar_w = Matrix::Constant(1, 1, 0.2);
  double s1 = pivotal_statistic(Vector::Constant(1, 1.1), scalar_w, 50, Vector::Constant(1, 1.0));
  CHECK(s1 == doctest::Approx(50.0 * 0.01 / 0.2).epsilon(1e-12));

  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(pivotal_statistic(Vector::Zero(2), singular, 10, Vector::Ones(2)), DegeneracyError);
}

TEST_CASE("empirical quantile") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(sorted_quantile(x, 0.0) == 1.0);
  CHECK(sorted_quantile(x, 1.0) == 5.0);
  CHECK(sorted_quantile(x, 0.5) == 3.0);
  CHECK(sorted_quantile(x, 0.1) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK_THROWS_AS(sorted_quantile({}, 0.5), StateError);
}

TEST_CASE("simulated quantiles of the scalar random-scaling statistic") {
  auto table = simulate_pivotal_quantiles(1, 1000, 100000, {0.90, 0.95, 0.99}, 20240601, 2);
  REQUIRE(table.t_abs.size() == 3);
  CHECK(std::abs(table.t_abs[1] - 6.753) <= 0.15);
  // The built-in entries beyond 95% were frozen from this simulation; they must
  // stay within Monte Carlo error of a fresh run.
  CHECK(std::abs(table.t_abs[0] - *builtin_critical_value(0.90)) <= 0.1);
  CHECK(std::abs(table.t_abs[2] - *builtin_critical_value(0.99)) <= 0.4);
  CHECK(std::abs(table.t_median) < 0.05);
  CHECK(table.t_abs[0] < table.t_abs[1]);
  CHECK(table.t_abs[1] < table.t_abs[2]);
  CHECK(table.pivotal[0] < table.pivotal[1]);
  CHECK(table.pivotal[1] < table.pivotal[2]);
  // In one dimension the pivotal statistic is the squared t statistic; only the
  // quantile interpolation differs.
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(table.pivotal[k] == doctest::Approx(table.t_abs[k] * table.t_abs[k]).epsilon(1e-3));
}

TEST_CASE("multivariate quantiles are monotone and thread independent") {
  auto a = simulate_pivotal_quantiles(2, 100, 10000, {0.5, 0.9, 0.95}, 3, 1);
  auto b = simulate_pivotal_quantiles(2, 100, 10000, {0.5, 0.9, 0.95}, 3, 4);
  CHECK(a.pivotal == b.pivotal);
  CHECK(a.pivotal[0] < a.pivotal[1]);
  CHECK(a.pivotal[1] < a.pivotal[2]);
  CHECK(a.t_abs.empty());
  CHECK_THROWS_AS(simulate_pivotal_quantiles(1, 50, 10000, {0.95}, 1), ParameterError);
  CHECK_THROWS_AS(simulate_pivotal_quantiles(1, 100, 999, {0.95}, 1), ParameterError);
}
