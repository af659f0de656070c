#include "qavg/exact.hpp"

#include "qavg/csv.hpp"
#include "qavg/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace qavg {

namespace {

void check_length(const Vector& q, Index d) {
  if (q.size() != d) throw ShapeError("Q table length does not match S*A");
}

constexpr double kTieTolerance = 1e-9;

}  // namespace

Vector greedy_value(const Vector& q, Index n_states, Index n_actions) {
  check_length(q, n_states * n_actions);
  Vector v(n_states);
  for (Index s = 0; s < n_states; ++s) v(s) = q.segment(s * n_actions, n_actions).maxCoeff();
  return v;
}

Policy greedy_policy(const Vector& q, Index n_states, Index n_actions) {
  check_length(q, n_states * n_actions);
  Policy pi(static_cast<std::size_t>(n_states));
  for (Index s = 0; s < n_states; ++s) {
    Index best = 0;
    for (Index a = 1; a < n_actions; ++a) {
      if (q(s * n_actions + a) > q(s * n_actions + best)) best = a;
    }
    pi[static_cast<std::size_t>(s)] = best;
  }
  return pi;
}

Vector bellman(const TabularMDP& mdp, const Vector& q) {
  check_length(q, mdp.n_pairs());
  Vector v = greedy_value(q, mdp.n_states(), mdp.n_actions());
  return mdp.reward_mean() + mdp.gamma() * (mdp.transitions() * v);
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double tol, long max_iter) {
  if (!(tol > 0.0)) throw ParameterError("value iteration tolerance must be positive");
  Vector q = Vector::Zero(mdp.n_pairs());
  double residual = 0.0;
  long it = 0;
  for (;;) {
    Vector next = bellman(mdp, q);
    residual = linf(Vector(next - q));
    q = std::move(next);
    ++it;
    if (residual <= tol) break;
    if (it >= max_iter) throw ConvergenceError("value iteration did not converge", residual, it);
  }
  // q is now within tol*gamma/(1-gamma) of Q*; evaluating its greedy policy
  // exactly usually lands on Q* to roundoff.
  ValueIterationResult result{q, it, linf(Vector(bellman(mdp, q) - q))};
  Policy pi = greedy_policy(q, mdp.n_states(), mdp.n_actions());
  Matrix system = Matrix::Identity(mdp.n_pairs(), mdp.n_pairs()) -
                  mdp.gamma() * policy_transition(mdp, pi).pairs;
  Vector polished = system.partialPivLu().solve(mdp.reward_mean());
  double polished_residual = linf(Vector(bellman(mdp, polished) - polished));
  if (polished.allFinite() && polished_residual < result.residual) {
    result.q = std::move(polished);
    result.residual = polished_residual;
  }
  return result;
}

GapInfo optimality_gap(const Vector& q_star, Index n_states, Index n_actions) {
  check_length(q_star, n_states * n_actions);
  GapInfo info;
  if (n_actions == 1) {
    info.single_action = true;
    info.gap = std::numeric_limits<double>::infinity();
    info.lipschitz = 0.0;
    return info;
  }
  Policy pi = greedy_policy(q_star, n_states, n_actions);
  double gap = std::numeric_limits<double>::infinity();
  for (Index s = 0; s < n_states; ++s) {
    double best = q_star(s * n_actions + pi[static_cast<std::size_t>(s)]);
    for (Index a = 0; a < n_actions; ++a) {
      if (a == pi[static_cast<std::size_t>(s)]) continue;
      gap = std::min(gap, best - q_star(s * n_actions + a));
    }
  }
  if (gap <= kTieTolerance) {
    info.degenerate = true;
    info.gap = 0.0;
    info.lipschitz = std::numeric_limits<double>::infinity();
  } else {
    info.gap = gap;
    info.lipschitz = 4.0 / gap;
  }
  return info;
}

Vector bellman_noise_cov(const TabularMDP& mdp, const Vector& v) {
  if (v.size() != mdp.n_states()) throw ShapeError("value vector length does not match S");
  const Matrix& p = mdp.transitions();
  Vector first = p * v;
  Vector second = p * v.cwiseProduct(v);
  Vector spread = (second - first.cwiseProduct(first)).cwiseMax(0.0);
  const double g2 = mdp.gamma() * mdp.gamma();
  return mdp.reward_variance() + g2 * spread;
}

PolicyTransitions policy_transition(const TabularMDP& mdp, const Policy& policy) {
  if (static_cast<Index>(policy.size()) != mdp.n_states()) {
    throw ShapeError("policy needs one action per state");
  }
  Matrix stochastic = Matrix::Zero(mdp.n_states(), mdp.n_actions());
  for (Index s = 0; s < mdp.n_states(); ++s) {
    Index a = policy[static_cast<std::size_t>(s)];
    if (a < 0 || a >= mdp.n_actions()) throw ParameterError("policy action out of range");
    stochastic(s, a) = 1.0;
  }
  return policy_transition(mdp, stochastic);
}

PolicyTransitions policy_transition(const TabularMDP& mdp, const Matrix& policy) {
  const Index n_states = mdp.n_states();
  const Index n_actions = mdp.n_actions();
  if (policy.rows() != n_states || policy.cols() != n_actions) {
    throw ShapeError("stochastic policy must be S x A");
  }
  for (Index s = 0; s < n_states; ++s) {
    if ((policy.row(s).array() < 0.0).any() || std::abs(policy.row(s).sum() - 1.0) > 1e-10) {
      throw ParameterError("policy rows must be probability vectors");
    }
  }
  // Pi is S x D with Pi(s, (s, a)) = pi(a | s).
  const Index d = mdp.n_pairs();
  Matrix pi = Matrix::Zero(n_states, d);
  for (Index s = 0; s < n_states; ++s) {
    for (Index a = 0; a < n_actions; ++a) pi(s, s * n_actions + a) = policy(s, a);
  }
  return {mdp.transitions() * pi, pi * mdp.transitions()};
}

Matrix asymptotic_cov(double gamma, const Matrix& pair_transition, const Vector& var_z) {
  const Index d = pair_transition.rows();
  if (pair_transition.cols() != d || var_z.size() != d) {
    throw ShapeError("transition and noise dimensions disagree");
  }
  Matrix system = Matrix::Identity(d, d) - gamma * pair_transition;
  Eigen::PartialPivLU<Matrix> lu(system);
  if (!(std::abs(lu.determinant()) > 1e-300)) throw NumericError("I - gamma P_pi is singular");
  // X = (I - gamma P)^{-1} diag(var_z); Var_Q = X (I - gamma P)^{-T} = (lu.solve(X^T))^T.
  Matrix x = lu.solve(Matrix(var_z.asDiagonal()));
  Matrix var_q = lu.solve(Matrix(x.transpose())).transpose();
  if (!var_q.allFinite()) throw NumericError("asymptotic covariance is not finite");
  return 0.5 * (var_q + var_q.transpose());
}

Matrix asymptotic_cov(const TabularMDP& mdp, const Vector& var_z, const Policy& pi_star) {
  return asymptotic_cov(mdp.gamma(), policy_transition(mdp, pi_star).pairs, var_z);
}

Matrix value_cov(const Matrix& var_q, const Policy& pi_star, Index n_actions) {
  const Index n_states = static_cast<Index>(pi_star.size());
  if (var_q.rows() != n_states * n_actions || var_q.cols() != var_q.rows()) {
    throw ShapeError("Var_Q must be (S*A) x (S*A)");
  }
  Matrix var_v(n_states, n_states);
  for (Index s = 0; s < n_states; ++s) {
    for (Index u = 0; u < n_states; ++u) {
      var_v(s, u) = var_q(s * n_actions + pi_star[static_cast<std::size_t>(s)],
                          u * n_actions + pi_star[static_cast<std::size_t>(u)]);
    }
  }
  return var_v;
}

SolveResult solve(const TabularMDP& mdp, double tol, long max_iter) {
  ValueIterationResult vi = value_iteration(mdp, tol, max_iter);
  SolveResult out;
  out.q_star = std::move(vi.q);
  out.iterations = vi.iterations;
  out.residual = vi.residual;
  out.v_star = greedy_value(out.q_star, mdp.n_states(), mdp.n_actions());
  out.pi_star = greedy_policy(out.q_star, mdp.n_states(), mdp.n_actions());
  out.gap = optimality_gap(out.q_star, mdp.n_states(), mdp.n_actions());
  out.gap_certified = !out.gap.degenerate && out.residual <= out.gap.gap / 100.0;
  out.var_z = bellman_noise_cov(mdp, out.v_star);
  out.var_q = asymptotic_cov(mdp, out.var_z, out.pi_star);
  out.var_v = value_cov(out.var_q, out.pi_star, mdp.n_actions());
  return out;
}

Vector soft_max_operator(const Vector& q, Index n_states, Index n_actions, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("temperature lambda must be positive");
  check_length(q, n_states * n_actions);
  Vector out(n_states);
  for (Index s = 0; s < n_states; ++s) {
    auto row = q.segment(s * n_actions, n_actions);
    double m = row.maxCoeff();
    double sum = 0.0;
    for (Index a = 0; a < n_actions; ++a) sum += std::exp((row(a) - m) / lambda);
    out(s) = m + lambda * std::log(sum);
  }
  return out;
}

Vector softmax(const Vector& v) {
  Vector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

Matrix softmax_policy(const Vector& q, Index n_states, Index n_actions, double lambda) {
  if (!(lambda > 0.0)) throw ParameterError("temperature lambda must be positive");
  check_length(q, n_states * n_actions);
  Matrix pi(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s) {
    pi.row(s) = softmax(Vector(q.segment(s * n_actions, n_actions) / lambda)).transpose();
  }
  return pi;
}

Vector soft_bellman(const TabularMDP& mdp, const Vector& q, double lambda) {
  Vector soft = soft_max_operator(q, mdp.n_states(), mdp.n_actions(), lambda);
  return mdp.reward_mean() + mdp.gamma() * (mdp.transitions() * soft);
}

RegularizedSolveResult regularized_fixed_point(const TabularMDP& mdp, double lambda, double tol,
                                               long max_iter) {
  if (!(lambda > 0.0)) throw ParameterError("temperature lambda must be positive");
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  Vector q = Vector::Zero(mdp.n_pairs());
  double residual = 0.0;
  long it = 0;
  for (;;) {
    Vector next = soft_bellman(mdp, q, lambda);
    residual = linf(Vector(next - q));
    q = std::move(next);
    ++it;
    if (residual <= tol) break;
    if (it >= max_iter) {
      throw ConvergenceError("regularized value iteration did not converge", residual, it);
    }
  }

  RegularizedSolveResult out;
  out.lambda = lambda;
  out.iterations = it;
  out.residual = linf(Vector(soft_bellman(mdp, q, lambda) - q));
  out.pi_lambda = softmax_policy(q, mdp.n_states(), mdp.n_actions(), lambda);
  Vector soft_v = soft_max_operator(q, mdp.n_states(), mdp.n_actions(), lambda);
  out.var_z_reg = bellman_noise_cov(mdp, soft_v);
  out.var_q_reg =
      asymptotic_cov(mdp.gamma(), policy_transition(mdp, out.pi_lambda).pairs, out.var_z_reg);
  out.q_lambda = std::move(q);
  return out;
}

void write_q_star_csv(std::ostream& out, const SolveResult& result, Index n_actions) {
  CsvWriter csv(out);
  csv.header({"s", "a", "q_star", "v_star_if_a0", "pi_star_if_a0"});
  const Index n_states = result.v_star.size();
  for (Index s = 0; s < n_states; ++s) {
    for (Index a = 0; a < n_actions; ++a) {
      double q = result.q_star(s * n_actions + a);
      if (a == 0) {
        csv.row(s, a, q, result.v_star(s), result.pi_star[static_cast<std::size_t>(s)]);
      } else {
        csv.row(s, a, q, "", "");
      }
    }
  }
}

void write_var_csv(std::ostream& out, const SolveResult& result, Index n_actions) {
  CsvWriter csv(out);
  csv.header({"s", "a", "var_z", "var_q_diag"});
  const Index n_states = result.v_star.size();
  for (Index s = 0; s < n_states; ++s) {
    for (Index a = 0; a < n_actions; ++a) {
      Index i = s * n_actions + a;
      csv.row(s, a, result.var_z(i), result.var_q(i, i));
    }
  }
}

void write_var_q_full_csv(std::ostream& out, const Matrix& var_q) {
  for (Index i = 0; i < var_q.rows(); ++i) {
    for (Index j = 0; j < var_q.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(var_q(i, j));
    }
    out << '\n';
  }
}

}  // namespace qavg
