#include "doctest.h"
#include "fixtures.hpp"

#include "qavg/error.hpp"
#include "qavg/exact.hpp"
#include "qavg/parallel.hpp"
#include "qavg/sa.hpp"

#include <cmath>
#include <vector>

using namespace qavg;

namespace {

struct StoreAll : TrajectoryObserver {
  std::vector<Vector> q;
  std::vector<Vector> q_bar;
  void observe(const RunState& s) override {
    q.push_back(s.q);
    q_bar.push_back(s.q_bar);
  }
};

GenerativeSample fixed_sample(Index d, double reward, Index next) {
  GenerativeSample s;
  s.reward_draw = Vector::Constant(d, reward);
  s.next_state.assign(static_cast<std::size_t>(d), next);
  return s;
}

}  // namespace

TEST_CASE("step sizes") {
  auto poly = StepSchedule::polynomial(0.51);
  CHECK(poly(0, 0.9) == 1.0);
  CHECK(poly(1, 0.9) == 1.0);
  CHECK(poly(4, 0.9) == doctest::Approx(std::exp(-0.51 * std::log(4.0))).epsilon(1e-15));
  CHECK(poly(4, 0.9) == doctest::Approx(0.49312).epsilon(1e-4));
  CHECK(StepSchedule::linear_rescaled()(2, 0.5) == 0.5);
  CHECK(step_size(StepSchedule::linear_rescaled(), 0, 0.5) == 1.0);
  CHECK_THROWS_AS(StepSchedule::polynomial(1.0), ParameterError);
  CHECK_THROWS_AS(StepSchedule::polynomial(0.0), ParameterError);
  CHECK_THROWS_AS(StepSchedule::polynomial(-0.3), ParameterError);
}

TEST_CASE("polynomial schedule satisfies the step assumptions") {
  for (double alpha : {0.51, 0.7, 0.9}) {
    auto eta = StepSchedule::polynomial(alpha);
    for (std::int64_t t = 1; t < 100000; ++t) {
      REQUIRE(eta(t + 1, 0.9) < eta(t, 0.9));
      REQUIRE(static_cast<double>(t + 1) * eta(t + 1, 0.9) > static_cast<double>(t) * eta(t, 0.9));
    }
    double previous = 1e300, sum = 0.0;
    std::int64_t t = 0;
    for (std::int64_t T : {1000, 10000, 100000}) {
      for (; t < T; ++t) sum += eta(t + 1, 0.9);
      double scaled = sum / std::sqrt(static_cast<double>(T));
      CHECK(scaled < previous);
      previous = scaled;
    }
  }
}

TEST_CASE("full step is one empirical Bellman application") {
  auto mdp = random_mdp(3, 2, 0.8, 4, RandomRewards::uniform_noise);
  RandomStream rng(1);
  auto sample = sample_generative(mdp, rng);
  Vector q = Vector::LinSpaced(6, 0.0, 2.5);
  Vector out = q_step(mdp, q, sample, 1.0);
  for (Index i = 0; i < 6; ++i) {
    Index n = sample.next_state[static_cast<std::size_t>(i)];
    CHECK(out(i) == sample.reward_draw(i) + 0.8 * q.segment(n * 2, 2).maxCoeff());
  }
}

TEST_CASE("noise-free fixed point is stationary for every step") {
  auto mdp = fixture::single(0.5, 0.9);
  auto sample = fixed_sample(1, 0.5, 0);
  for (double eta : {1.0, 0.5, 0.01}) CHECK(q_step(mdp, Vector::Constant(1, 5.0), sample, eta)(0) == 5.0);
}

TEST_CASE("q_step validates inputs and may alias") {
  auto mdp = random_mdp(2, 2, 0.5, 1);
  auto sample = fixed_sample(4, 0.2, 1);
  CHECK_THROWS_AS(q_step(mdp, Vector::Zero(3), sample, 0.5), ShapeError);
  CHECK_THROWS_AS(q_step(mdp, Vector::Zero(4), fixed_sample(3, 0.2, 1), 0.5), ShapeError);
  CHECK_THROWS_AS(q_step(mdp, Vector::Zero(4), sample, 0.0), ParameterError);
  CHECK_THROWS_AS(q_step(mdp, Vector::Zero(4), sample, 1.5), ParameterError);

  Vector q = Vector::LinSpaced(4, 0.0, 1.0);
  Vector expect = q_step(mdp, q, sample, 0.3);
  q_step(mdp, q, sample, 0.3, q);
  CHECK(q == expect);
}

TEST_CASE("q_step preserves the value envelope") {
  RandomStream rng(3);
  for (int k = 0; k < 200; ++k) {
    auto mdp = random_mdp(4, 3, 0.9, static_cast<std::uint64_t>(k % 7), RandomRewards::uniform_noise);
    Vector q(12);
    for (Index i = 0; i < 12; ++i) q(i) = rng.uniform() * 10.0;
    auto sample = sample_generative(mdp, rng);
    Vector out = q_step(mdp, q, sample, rng.uniform());
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 10.0 + 1e-12);
  }
}

TEST_CASE("regularized step matches the hand formula") {
  TabularMDP mdp(1, 2, 0.5, Matrix::Constant(2, 1, 1.0),
                 {RewardModel::deterministic(0.1), RewardModel::deterministic(0.4)});
  GenerativeSample sample = fixed_sample(2, 0.1, 0);
  sample.reward_draw(1) = 0.4;
  Vector q(2);
  q << 1.0, 2.0;
  const double lambda = 0.5, eta = 0.25;
  const double soft = lambda * std::log(std::exp(1.0 / lambda) + std::exp(2.0 / lambda));
  Vector out = reg_q_step(mdp, q, sample, eta, lambda);
  CHECK(out(0) == doctest::Approx(0.75 * 1.0 + 0.25 * (0.1 + 0.5 * soft)).epsilon(1e-14));
  CHECK(out(1) == doctest::Approx(0.75 * 2.0 + 0.25 * (0.4 + 0.5 * soft)).epsilon(1e-14));
  CHECK_THROWS_AS(reg_q_step(mdp, q, sample, eta, 0.0), ParameterError);
}

TEST_CASE("a single iteration from zero") {
  auto mdp = random_mdp(4, 3, 0.7, 2, RandomRewards::uniform_noise);
  RunConfig cfg{StepSchedule::polynomial(0.51), 1, 99};
  auto state = run_trajectory(mdp, cfg);
  RandomStream rng(99);
  auto sample = sample_generative(mdp, rng);
  CHECK(state.q == sample.reward_draw);
  CHECK(state.q_bar == state.q);
  CHECK(state.n_averaged == 1);
}

TEST_CASE("trajectory matches a scalar reimplementation") {
  auto mdp = random_mdp(3, 2, 0.8, 5, RandomRewards::uniform_noise);
  RunConfig cfg{StepSchedule::polynomial(0.6), 300, 13};
  StoreAll store;
  TrajectoryObserver* obs[] = {&store};
  run_trajectory(mdp, cfg, obs);

  RandomStream rng(13);
  std::vector<double> q(6, 0.0);
  for (std::int64_t t = 1; t <= 300; ++t) {
    auto sample = sample_generative(mdp, rng);
    double eta = std::pow(static_cast<double>(t), -0.6);
    std::vector<double> v(3);
    for (std::size_t s = 0; s < 3; ++s) v[s] = std::max(q[2 * s], q[2 * s + 1]);
    std::vector<double> next(6);
    for (std::size_t i = 0; i < 6; ++i)
      next[i] = (1 - eta) * q[i] + eta * (sample.reward_draw(static_cast<Index>(i)) +
                                          0.8 * v[static_cast<std::size_t>(sample.next_state[i])]);
    q = next;
    for (std::size_t i = 0; i < 6; ++i)
      REQUIRE(std::abs(store.q[static_cast<std::size_t>(t - 1)](static_cast<Index>(i)) - q[i]) <= 1e-12);
  }
}

TEST_CASE("running average equals the stored-trajectory mean") {
  auto mdp = random_mdp(4, 3, 0.9, 6);
  for (double warmup : {0.0, 0.05, 0.5}) {
    RunConfig cfg{StepSchedule::polynomial(0.51), 2000, 4, warmup};
    StoreAll store;
    TrajectoryObserver* obs[] = {&store};
    auto state = run_trajectory(mdp, cfg, obs);
    const auto skip = static_cast<std::int64_t>(std::floor(warmup * 2000));
    CHECK(state.warmup == skip);
    CHECK(state.n_averaged == 2000 - skip);
    Vector sum = Vector::Zero(12);
    for (std::int64_t t = skip; t < 2000; ++t) sum += store.q[static_cast<std::size_t>(t)];
    Vector mean = sum / static_cast<double>(2000 - skip);
    CHECK((state.q_bar - mean).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("iterates stay inside the value envelope") {
  for (double gamma : {0.5, 0.9, 0.99}) {
    auto mdp = random_mdp(4, 3, gamma, 1, RandomRewards::uniform_noise);
    RunConfig cfg{StepSchedule::polynomial(0.51), 3000, 8};
    StoreAll store;
    TrajectoryObserver* obs[] = {&store};
    run_trajectory(mdp, cfg, obs);
    for (const auto& q : store.q) {
      REQUIRE(q.minCoeff() >= 0.0);
      REQUIRE(linf(q) <= 1.0 / (1.0 - gamma) + 1e-12);
    }
  }
}

TEST_CASE("runs are deterministic across repeats and thread counts") {
  auto mdp = random_mdp(4, 3, 0.6, 0);
  RunConfig cfg{StepSchedule::polynomial(0.51), 5000, 0, 0.05};
  cfg.inference = CovarianceMode::diagonal;
  auto one = run_indexed(8, 1, [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = derive_seed(1, i);
    return run_trajectory(mdp, c).q_bar;
  });
  auto four = run_indexed(8, 4, [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = derive_seed(1, i);
    return run_trajectory(mdp, c).q_bar;
  });
  for (std::size_t i = 0; i < 8; ++i) CHECK(one[i] == four[i]);
  CHECK(run_trajectory(mdp, cfg).q_bar == run_trajectory(mdp, cfg).q_bar);
}

TEST_CASE("run configuration validation") {
  auto mdp = random_mdp(2, 2, 0.5, 1);
  RunConfig cfg{StepSchedule::polynomial(0.51), 10, 1};
  cfg.variant = Variant::entropy;
  CHECK_THROWS_AS(run_trajectory(mdp, cfg), ParameterError);
  cfg.variant = Variant::plain;
  cfg.horizon = 0;
  CHECK_THROWS_AS(run_trajectory(mdp, cfg), ParameterError);
  cfg.horizon = 10;
  cfg.warmup_fraction = 1.0;
  CHECK_THROWS_AS(run_trajectory(mdp, cfg), ParameterError);
}

TEST_CASE("entropy variant converges toward the regularized fixed point") {
  auto mdp = random_mdp(4, 3, 0.6, 3);
  auto reg = regularized_fixed_point(mdp, 0.5);
  RunConfig cfg{StepSchedule::polynomial(0.6), 20000, 5};
  cfg.variant = Variant::entropy;
  cfg.lambda = 0.5;
  auto state = run_trajectory(mdp, cfg);
  CHECK(linf(Vector(state.q_bar - reg.q_lambda)) < 0.1);
}

TEST_CASE("averaged error shrinks with the horizon on most seeds") {
  auto mdp = random_mdp(4, 3, 0.6, 0);
  auto q_star = solve(mdp).q_star;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 21; ++seed) {
    RunConfig short_run{StepSchedule::polynomial(0.51), 1000, derive_seed(seed, 0)};
    RunConfig long_run{StepSchedule::polynomial(0.51), 100000, derive_seed(seed, 1)};
    double e_short = linf(Vector(run_trajectory(mdp, short_run).q_bar - q_star));
    double e_long = linf(Vector(run_trajectory(mdp, long_run).q_bar - q_star));
    wins += e_long < e_short;
  }
  CHECK(wins > 10);
}
