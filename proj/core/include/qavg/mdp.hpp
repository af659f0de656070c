#pragma once

#include "qavg/rng.hpp"
#include "qavg/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qavg {

enum class RewardKind { deterministic, uniform01, bernoulli };

/**
 * Distribution of the immediate reward of one state-action pair.
 *
 * All supported families live on [0, 1]; `param` is the constant value for
 * deterministic rewards and the success probability for Bernoulli rewards.
 */
struct RewardModel {
  RewardKind kind = RewardKind::deterministic;
  double param = 0.0;

  static RewardModel deterministic(double value);
  static RewardModel uniform01() { return {RewardKind::uniform01, 0.0}; }
  static RewardModel bernoulli(double p);

  double mean() const;
  double variance() const;
  double draw(RandomStream& rng) const;

  friend bool operator==(const RewardModel&, const RewardModel&) = default;
};

std::string_view to_string(RewardKind kind);
RewardKind reward_kind_from_string(std::string_view name);

/**
 * Finite discounted MDP with a generative model.
 *
 * State-action pairs are flattened as s * n_actions + a; every vector in R^D
 * and every D x D matrix in the library uses this order. The model is
 * immutable after construction.
 */
class TabularMDP {
 public:
  /// Validates sizes, discount and row-stochasticity (rows must sum to 1
  /// within 1e-12); throws ParameterError or ShapeError.
  TabularMDP(Index n_states, Index n_actions, double gamma, Matrix transitions,
             std::vector<RewardModel> rewards);

  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  Index n_pairs() const { return n_states_ * n_actions_; }
  double gamma() const { return gamma_; }

  Index pair(Index s, Index a) const { return s * n_actions_ + a; }

  /// D x S matrix, row (s,a) is P(. | s, a).
  const Matrix& transitions() const { return transitions_; }
  const std::vector<RewardModel>& rewards() const { return rewards_; }
  const Vector& reward_mean() const { return reward_mean_; }
  const Vector& reward_variance() const { return reward_variance_; }

  /// Row-wise cumulative transition probabilities used for sampling; the
  /// last column is exactly 1.
  const Matrix& transition_cdf() const { return cdf_; }

  /// Same model with a different discount factor.
  TabularMDP with_gamma(double gamma) const;

  friend bool operator==(const TabularMDP& a, const TabularMDP& b);

 private:
  Index n_states_;
  Index n_actions_;
  double gamma_;
  Matrix transitions_;
  std::vector<RewardModel> rewards_;
  Vector reward_mean_;
  Vector reward_variance_;
  Matrix cdf_;
};

/// How random_mdp assigns rewards.
enum class RandomRewards {
  /// Each pair gets a fixed reward r(s,a) ~ U(0,1) drawn once; distinct
  /// means give a unique optimal policy with a positive gap.
  uniform_means,
  /// Every pair pays a fresh U(0,1) draw. All means equal 0.5, so every
  /// action ties and the optimal policy is not unique.
  uniform_noise,
};

/// Random instance: each transition row is an independent normalized vector
/// of U(0,1) draws.
TabularMDP random_mdp(Index n_states, Index n_actions, double gamma, std::uint64_t seed,
                      RandomRewards rewards = RandomRewards::uniform_means);

/// One synchronous draw from the generative model: a reward and a next state
/// for every state-action pair. Row (s,a) of the empirical transition matrix
/// is the indicator of next_state[(s,a)].
struct GenerativeSample {
  Vector reward_draw;
  std::vector<Index> next_state;
};

/// Fills `out` (resized on demand) with an independent draw for every pair.
void sample_generative(const TabularMDP& mdp, RandomStream& rng, GenerativeSample& out);
GenerativeSample sample_generative(const TabularMDP& mdp, RandomStream& rng);

/// JSON document {n_states, n_actions, gamma, transitions, rewards}. Doubles
/// are written with round-trip precision, so parsing the output reproduces
/// the model bit for bit.
std::string to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(std::string_view text);

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);
TabularMDP load_mdp(const std::filesystem::path& path);

}  // namespace qavg
