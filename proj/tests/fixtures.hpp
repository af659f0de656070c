#pragma once

#include "qavg/mdp.hpp"

#include <vector>

namespace qavg::fixture {

/// S = A = 1 paying draws from `model`.
inline TabularMDP single(RewardModel model, double gamma) {
  Matrix p(1, 1);
  p(0, 0) = 1.0;
  return TabularMDP(1, 1, gamma, p, {model});
}

inline TabularMDP single(double reward, double gamma) {
  return single(RewardModel::deterministic(reward), gamma);
}

/// Every pair moves to `next[pair]` with probability one and pays rewards[pair].
inline TabularMDP deterministic(Index S, Index A, double gamma, const std::vector<Index>& next,
                                const std::vector<double>& rewards) {
  Matrix p = Matrix::Zero(S * A, S);
  std::vector<RewardModel> r;
  for (Index i = 0; i < S * A; ++i) {
    p(i, next[static_cast<std::size_t>(i)]) = 1.0;
    r.push_back(RewardModel::deterministic(rewards[static_cast<std::size_t>(i)]));
  }
  return TabularMDP(S, A, gamma, p, r);
}

/// Same transitions and gamma, every reward replaced by `model`.
inline TabularMDP with_rewards(const TabularMDP& mdp, RewardModel model) {
  return TabularMDP(mdp.n_states(), mdp.n_actions(), mdp.gamma(), mdp.transitions(),
                    std::vector<RewardModel>(static_cast<std::size_t>(mdp.n_pairs()), model));
}

}  // namespace qavg::fixture
