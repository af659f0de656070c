#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace qavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Deterministic policy: one action index per state.
using Policy = std::vector<Index>;

/// Sup norm of a vector.
inline double linf(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Induced infinity norm of a matrix (maximum absolute row sum).
inline double linf(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace qavg
