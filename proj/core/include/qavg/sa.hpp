#pragma once

#include "qavg/inference.hpp"
#include "qavg/mdp.hpp"
#include "qavg/types.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace qavg {

/**
 * Step-size rule.
 *
 * polynomial:       eta_0 = 1, eta_t = t^-alpha for t >= 1, alpha in (0, 1)
 * linear_rescaled:  eta_t = 1 / (1 + (1 - gamma) t)
 */
struct StepSchedule {
  enum class Kind { polynomial, linear_rescaled };

  Kind kind = Kind::polynomial;
  double alpha = 0.51;

  static StepSchedule polynomial(double alpha);
  static StepSchedule linear_rescaled() { return {Kind::linear_rescaled, 0.0}; }

  double operator()(std::int64_t t, double gamma) const;
};

double step_size(const StepSchedule& schedule, std::int64_t t, double gamma);

/// (1 - eta) q_prev + eta (r_t + gamma max_a' q_prev(s_t, a')), written into `out`.
void q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
            double eta, Vector& out);
Vector q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
              double eta);

/// Entropy-regularized step: the bootstrap target uses the soft maximum
/// lambda log sum_a exp(q / lambda) at the sampled next state.
void reg_q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
                double eta, double lambda, Vector& out);
Vector reg_q_step(const TabularMDP& mdp, const Vector& q_prev, const GenerativeSample& sample,
                  double eta, double lambda);

enum class Variant { plain, entropy };

struct RunConfig {
  StepSchedule schedule;
  std::int64_t horizon = 1;
  std::uint64_t seed = 0;
  double warmup_fraction = 0.0;
  Variant variant = Variant::plain;
  std::optional<double> lambda;
  /// Random-scaling accumulator fed with post-warm-up iterates, if any.
  std::optional<CovarianceMode> inference;
};

struct RunState {
  std::int64_t t = 0;
  Vector q;
  /// Mean of the iterates after warm-up (zero until the first one arrives).
  Vector q_bar;
  std::int64_t warmup = 0;
  std::int64_t n_averaged = 0;
  std::optional<RsAccumulator> rs;
};

/// Receives the state after every iteration t = 1..horizon.
class TrajectoryObserver {
 public:
  virtual ~TrajectoryObserver() = default;
  virtual void observe(const RunState& state) = 0;
};

/**
 * Runs `horizon` iterations from Q_0 = 0. The first floor(warmup_fraction *
 * horizon) iterations only advance the recursion; afterwards q_bar and the
 * optional accumulator see every iterate. Deterministic given the config.
 */
RunState run_trajectory(const TabularMDP& mdp, const RunConfig& config,
                        std::span<TrajectoryObserver* const> observers = {});

}  // namespace qavg
