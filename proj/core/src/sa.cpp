#include "qavg/sa.hpp"

#include "qavg/error.hpp"

#include <cmath>

namespace qavg {

StepSchedule StepSchedule::polynomial(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("polynomial step exponent must lie in (0, 1)");
  return {Kind::polynomial, alpha};
}

double StepSchedule::operator()(std::int64_t t, double gamma) const {
  if (t < 0) throw ParameterError("step index must be nonnegative");
  switch (kind) {
    case Kind::polynomial:
      if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("polynomial step exponent must lie in (0, 1)");
      }
      return t == 0 ? 1.0 : std::pow(static_cast<double>(t), -alpha);
    case Kind::linear_rescaled:
      if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in (0, 1)");
      return 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(t));
  }
  return 0.0;
}

double step_size(const StepSchedule& schedule, std::int64_t t, double gamma) {
  return schedule(t, gamma);
}

namespace {

void check_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
                double eta) {
  const Index d = mdp.n_pairs();
  if (q_prev.size() != d || sample.reward_draw.size() != d ||
      static_cast<Index>(sample.next_state.size()) != d) {
    throw ShapeError("Q table or sample does not match the MDP");
  }
  if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("step size must lie in (0, 1]");
}

}  // namespace

void q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
            double eta, Vector& out) {
  check_step(mdp, q_prev, sample, eta);
  const Index n_states = mdp.n_states();
  const Index n_actions = mdp.n_actions();
  const double gamma = mdp.gamma();

  // Greedy values of q_prev, computed before `out` is touched so that
  // out may alias q_prev.
  double v_buf[64];
  std::vector<double> v_heap;
  double* v = v_buf;
  if (n_states > 64) {
    v_heap.resize(static_cast<std::size_t>(n_states));
    v = v_heap.data();
  }
  for (Index s = 0; s < n_states; ++s) {
    const double* row = q_prev.data() + s * n_actions;
    double m = row[0];
    for (Index a = 1; a < n_actions; ++a) m = row[a] > m ? row[a] : m;
    v[s] = m;
  }

  out.resize(q_prev.size());
  for (Index i = 0; i < mdp.n_pairs(); ++i) {
    double target = sample.reward_draw(i) + gamma * v[sample.next_state[static_cast<std::size_t>(i)]];
    out(i) = (1.0 - eta) * q_prev(i) + eta * target;
  }
}

Vector q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
              double eta) {
  Vector out;
  q_step(mdp, q_prev, sample, eta, out);
  return out;
}

void reg_q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
                double eta, double lambda, Vector& out) {
  check_step(mdp, q_prev, sample, eta);
  if (!(lambda > 0.0)) throw ParameterError("temperature lambda must be positive");
  const Index n_states = mdp.n_states();
  const Index n_actions = mdp.n_actions();
  const double gamma = mdp.gamma();

  std::vector<double> v(static_cast<std::size_t>(n_states));
  for (Index s = 0; s < n_states; ++s) {
    const double* row = q_prev.data() + s * n_actions;
    double m = row[0];
    for (Index a = 1; a < n_actions; ++a) m = row[a] > m ? row[a] : m;
    double sum = 0.0;
    for (Index a = 0; a < n_actions; ++a) sum += std::exp((row[a] - m) / lambda);
    v[static_cast<std::size_t>(s)] = m + lambda * std::log(sum);
  }

  out.resize(q_prev.size());
  for (Index i = 0; i < mdp.n_pairs(); ++i) {
    double target =
        sample.reward_draw(i) + gamma * v[static_cast<std::size_t>(sample.next_state[static_cast<std::size_t>(i)])];
    out(i) = (1.0 - eta) * q_prev(i) + eta * target;
  }
}

Vector reg_q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
                  double eta, double lambda) {
  Vector out;
  reg_q_step(mdp, q_prev, sample, eta, lambda, out);
  return out;
}

RunState run_trajectory(const TabularMDP& mdp, const RunConfig& config,
                        std::span<TrajectoryObserver* const> observers) {
  if (config.horizon < 1) throw ParameterError("horizon must be at least 1");
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction < 1.0)) {
    throw ParameterError("warm-up fraction must lie in [0, 1)");
  }
  if (config.variant == Variant::entropy && !(config.lambda && *config.lambda > 0.0)) {
    throw ParameterError("entropy variant needs a positive lambda");
  }

  const Index d = mdp.n_pairs();
  RunState state;
  state.q = Vector::Zero(d);
  state.q_bar = Vector::Zero(d);
  state.warmup = static_cast<std::int64_t>(
      std::floor(config.warmup_fraction * static_cast<double>(config.horizon)));
  if (config.inference) state.rs.emplace(d, *config.inference);

  RandomStream rng(config.seed);
  GenerativeSample sample;
  Vector next(d);
  for (std::int64_t t = 1; t <= config.horizon; ++t) {
    sample_generative(mdp, rng, sample);
    const double eta = config.schedule(t, mdp.gamma());
    if (config.variant == Variant::plain) {
      q_step(mdp, state.q, sample, eta, next);
    } else {
      reg_q_step(mdp, state.q, sample, eta, *config.lambda, next);
    }
    state.q.swap(next);
    state.t = t;
    if (t > state.warmup) {
      ++state.n_averaged;
      state.q_bar += (state.q - state.q_bar) / static_cast<double>(state.n_averaged);
      if (state.rs) state.rs->update(state.q);
    }
    for (auto* obs : observers) obs->observe(state);
  }
  return state;
}

}  // namespace qavg
