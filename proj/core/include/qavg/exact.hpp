#pragma once

#include "qavg/mdp.hpp"
#include "qavg/types.hpp"

#include <iosfwd>
#include <limits>

namespace qavg {

/// max_a q(s, a) for every state.
Vector greedy_value(const Vector& q, Index n_states, Index n_actions);

/// Greedy action per state; ties go to the lowest action index.
Policy greedy_policy(const Vector& q, Index n_states, Index n_actions);

/// Population Bellman operator: r + gamma * P * max_a' q(., a').
Vector bellman(const TabularMDP& mdp, const Vector& q);

struct ValueIterationResult {
  Vector q;
  long iterations = 0;
  double residual = 0.0;  ///< ||T q - q||_inf of the returned table
};

/// Iterates the Bellman operator from zero until ||T q - q||_inf <= tol,
/// then polishes with one exact evaluation of the greedy policy when that
/// lowers the residual. Throws ConvergenceError if max_iter is reached.
ValueIterationResult value_iteration(const TabularMDP& mdp, double tol = 1e-10,
                                     long max_iter = 100000);

struct GapInfo {
  double gap = std::numeric_limits<double>::infinity();
  double lipschitz = 0.0;  ///< 4 / gap
  bool degenerate = false;     ///< some state has two optimal actions (within 1e-9)
  bool single_action = false;  ///< A = 1, no competing action exists
};

/// Smallest margin between the optimal action and any other action.
GapInfo optimality_gap(const Vector& q_star, Index n_states, Index n_actions);

/// Diagonal of the Bellman noise covariance at the optimum:
/// Var R(s,a) + gamma^2 Var_{s' ~ P(.|s,a)} v(s').
Vector bellman_noise_cov(const TabularMDP& mdp, const Vector& v);

struct PolicyTransitions {
  Matrix pairs;   ///< D x D, P * Pi
  Matrix states;  ///< S x S, Pi * P
};

PolicyTransitions policy_transition(const TabularMDP& mdp, const Policy& policy);

/// Stochastic policy given as an S x A matrix with rows summing to one.
PolicyTransitions policy_transition(const TabularMDP& mdp, const Matrix& policy);

/// (I - gamma P_pi)^{-1} diag(var_z) (I - gamma P_pi)^{-T} for a D x D
/// state-action transition matrix P_pi, symmetrized.
Matrix asymptotic_cov(double gamma, const Matrix& pair_transition, const Vector& var_z);
Matrix asymptotic_cov(const TabularMDP& mdp, const Vector& var_z, const Policy& pi_star);

/// Var_V(s, s') = Var_Q((s, pi(s)), (s', pi(s'))).
Matrix value_cov(const Matrix& var_q, const Policy& pi_star, Index n_actions);

struct SolveResult {
  Vector q_star;
  Vector v_star;
  Policy pi_star;
  GapInfo gap;
  Vector var_z;
  Matrix var_q;
  Matrix var_v;
  long iterations = 0;
  double residual = 0.0;
  /// residual <= gap / 100, so pi_star is certainly the optimal policy.
  bool gap_certified = false;

  double var_q_diag_inf() const { return var_q.diagonal().cwiseAbs().maxCoeff(); }
};

/// Value iteration plus every derived quantity above.
SolveResult solve(const TabularMDP& mdp, double tol = 1e-10, long max_iter = 100000);

/// Soft maximum over actions: lambda * log sum_a exp(q(s,a) / lambda),
/// shifted by the row maximum before exponentiating.
Vector soft_max_operator(const Vector& q, Index n_states, Index n_actions, double lambda);

/// Numerically stable softmax of a vector.
Vector softmax(const Vector& v);

/// Row-wise softmax of q / lambda as an S x A matrix.
Matrix softmax_policy(const Vector& q, Index n_states, Index n_actions, double lambda);

/// r + gamma * P * L_lambda(q).
Vector soft_bellman(const TabularMDP& mdp, const Vector& q, double lambda);

struct RegularizedSolveResult {
  Vector q_lambda;
  Matrix pi_lambda;  ///< S x A
  Vector var_z_reg;
  Matrix var_q_reg;
  double lambda = 0.0;
  long iterations = 0;
  double residual = 0.0;
};

RegularizedSolveResult regularized_fixed_point(const TabularMDP& mdp, double lambda,
                                               double tol = 1e-10, long max_iter = 100000);

// CSV exports. Columns:
//   q_star:  s,a,q_star,v_star_if_a0,pi_star_if_a0  (last two blank unless a == 0)
//   var:     s,a,var_z,var_q_diag
//   var_q:   D x D row-major, no header
void write_q_star_csv(std::ostream& out, const SolveResult& result, Index n_actions);
void write_var_csv(std::ostream& out, const SolveResult& result, Index n_actions);
void write_var_q_full_csv(std::ostream& out, const Matrix& var_q);

}  // namespace qavg
