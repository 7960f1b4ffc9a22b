#pragma once

#include <Eigen/Dense>

#include "autodml/errors.hpp"

namespace autodml::detail {

// Solves A x = b for a symmetric system by LDLT. When the factorization is
// unusable (non-finite solution or residual above 1e-8 relative), the solve
// is retried once on A + delta I with delta = 1e-8 trace(A)/p; a second
// failure is reported as SingularSystem.
inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  auto attempt = [&](const Eigen::MatrixXd& M, Eigen::VectorXd& out) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) return false;
    out = ldlt.solve(b);
    if (!out.allFinite()) return false;
    double scale = std::max(1.0, b.norm());
    return (M * out - b).norm() <= 1e-8 * scale;
  };

  Eigen::VectorXd x;
  if (attempt(A, x)) return x;
  const double p = static_cast<double>(A.rows());
  const double delta = 1e-8 * A.trace() / p;
  Eigen::MatrixXd jittered = A;
  jittered.diagonal().array() += delta;
  if (delta > 0.0 && attempt(jittered, x)) return x;
  throw SingularSystem("symmetric solve failed even after jitter delta=" + std::to_string(delta));
}

}  // namespace autodml::detail
