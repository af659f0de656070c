#pragma once

// Independent reference computations used only by the tests. Everything here
// is written from the definitions with plain loops and shares no code path
// with the library routines it checks.

#include "qavg/mdp.hpp"
#include "qavg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qavg::oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat identity(std::size_t n) {
  Mat m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat multiply(const Mat& a, const Mat& b) {
  const std::size_t n = a.size(), k = b.size(), m = b[0].size();
  Mat c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Gauss-Jordan solve of A x = b with partial pivoting.
inline std::vector<double> gauss_solve(Mat a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// (T q)(s,a) evaluated scalar by scalar from the definition.
inline std::vector<double> bellman(const TabularMDP& mdp, const std::vector<double>& q) {
  const auto S = static_cast<std::size_t>(mdp.n_states());
  const auto A = static_cast<std::size_t>(mdp.n_actions());
  std::vector<double> out(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto i = static_cast<Index>(s * A + a);
      double expect = 0.0;
      for (std::size_t n = 0; n < S; ++n) {
        double best = q[n * A];
        for (std::size_t b = 1; b < A; ++b) best = std::max(best, q[n * A + b]);
        expect += mdp.transitions()(i, static_cast<Index>(n)) * best;
      }
      out[s * A + a] = mdp.rewards()[s * A + a].mean() + mdp.gamma() * expect;
    }
  }
  return out;
}

/// Row-stochastic D x D matrix P^pi for a deterministic policy, built cell by cell.
inline Mat pair_transition(const TabularMDP& mdp, const std::vector<Index>& pi) {
  const auto S = static_cast<std::size_t>(mdp.n_states());
  const auto A = static_cast<std::size_t>(mdp.n_actions());
  Mat p(S * A, std::vector<double>(S * A, 0.0));
  for (std::size_t i = 0; i < S * A; ++i)
    for (std::size_t n = 0; n < S; ++n)
      p[i][n * A + static_cast<std::size_t>(pi[n])] =
          mdp.transitions()(static_cast<Index>(i), static_cast<Index>(n));
  return p;
}

/// Q^pi = (I - gamma P^pi)^{-1} r.
inline std::vector<double> evaluate_policy(const TabularMDP& mdp, const std::vector<Index>& pi) {
  Mat p = pair_transition(mdp, pi);
  const std::size_t d = p.size();
  Mat sys = identity(d);
  std::vector<double> r(d);
  for (std::size_t i = 0; i < d; ++i) {
    r[i] = mdp.rewards()[i].mean();
    for (std::size_t j = 0; j < d; ++j) sys[i][j] -= mdp.gamma() * p[i][j];
  }
  return gauss_solve(sys, r);
}

/// Q* by enumerating every deterministic policy and keeping the entrywise
/// maximum of Q^pi (the optimal policy dominates all others).
inline std::vector<double> q_star_by_enumeration(const TabularMDP& mdp) {
  const auto S = static_cast<std::size_t>(mdp.n_states());
  const auto A = static_cast<std::size_t>(mdp.n_actions());
  std::vector<Index> pi(S, 0);
  std::vector<double> best(S * A, -1e300);
  for (;;) {
    auto q = evaluate_policy(mdp, pi);
    for (std::size_t i = 0; i < q.size(); ++i) best[i] = std::max(best[i], q[i]);
    std::size_t k = 0;
    while (k < S && ++pi[k] == static_cast<Index>(A)) pi[k++] = 0;
    if (k == S) break;
  }
  return best;
}

/// N diag(var_z) N^T with N = sum_{t=0}^{terms} M^t, M = gamma P^pi: the
/// truncated Neumann series of (I - M)^{-1} sandwiching the noise.
inline Mat neumann_cov(const Mat& p_pi, double gamma, const std::vector<double>& var_z, int terms) {
  const std::size_t d = p_pi.size();
  Mat m(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m[i][j] = gamma * p_pi[i][j];
  Mat power = identity(d);
  Mat n(d, std::vector<double>(d, 0.0));
  for (int t = 0; t <= terms; ++t) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) n[i][j] += power[i][j];
    power = multiply(m, power);
  }
  Mat scaled = n;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) scaled[i][j] *= var_z[j];
  return multiply(scaled, transpose(n));
}

/// Two-pass W_T: form S_t, then average (S_t - (t/T) S_T)(...)^T / T^2.
inline Mat two_pass_w(const std::vector<std::vector<double>>& iterates) {
  const std::size_t T = iterates.size(), d = iterates[0].size();
  std::vector<std::vector<double>> s(T, std::vector<double>(d, 0.0));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < d; ++i) s[t][i] = (t ? s[t - 1][i] : 0.0) + iterates[t][i];
  Mat w(d, std::vector<double>(d, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const double frac = static_cast<double>(t + 1) / static_cast<double>(T);
    std::vector<double> c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = s[t][i] - frac * s[T - 1][i];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) w[i][j] += c[i] * c[j];
  }
  const double norm = static_cast<double>(T) * static_cast<double>(T);
  for (auto& row : w)
    for (auto& x : row) x /= norm;
  return w;
}

/// Monte Carlo E Z(s,a)^2 with Z = (r_t - r) + gamma (P_t - P) V*, drawing
/// rewards and next states directly from the model definitions.
inline std::vector<double> monte_carlo_noise(const TabularMDP& mdp, const std::vector<double>& v_star,
                                             long n, std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(mdp.n_pairs());
  const auto S = static_cast<std::size_t>(mdp.n_states());
  std::vector<double> expect_v(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t n2 = 0; n2 < S; ++n2)
      expect_v[i] += mdp.transitions()(static_cast<Index>(i), static_cast<Index>(n2)) * v_star[n2];
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> second(d, 0.0);
  for (long k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto& rm = mdp.rewards()[i];
      double r = rm.kind == RewardKind::deterministic ? rm.param
                 : rm.kind == RewardKind::uniform01   ? unif(gen)
                                                      : (unif(gen) < rm.param ? 1.0 : 0.0);
      double u = unif(gen), acc = 0.0;
      std::size_t next = S - 1;
      for (std::size_t n2 = 0; n2 < S; ++n2) {
        acc += mdp.transitions()(static_cast<Index>(i), static_cast<Index>(n2));
        if (u < acc) {
          next = n2;
          break;
        }
      }
      double z = (r - rm.mean()) + mdp.gamma() * (v_star[next] - expect_v[i]);
      second[i] += z * z;
    }
  }
  for (auto& x : second) x /= static_cast<double>(n);
  return second;
}

}  // namespace qavg::oracle
