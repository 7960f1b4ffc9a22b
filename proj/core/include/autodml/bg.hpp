#pragma once

#include <Eigen/Dense>

#include "autodml/errors.hpp"

namespace autodml {

// Log-probabilities of the beta-geometric model and their first and second
// derivatives in the log-scale shapes (a, b), where alpha = e^a, beta = e^b
// and the discrete hazard at period s is alpha / (alpha + beta + s - 1).
// Everything is accumulated in one O(t) pass over positive terms, so there is
// no catastrophic cancellation to worry about.
struct BgDerivs {
  double log_p_gt = 0.0;  // log P(T > t)
  double log_p_eq = 0.0;  // log P(T = t)
  Eigen::Vector2d g_gt = Eigen::Vector2d::Zero();
  Eigen::Vector2d g_eq = Eigen::Vector2d::Zero();
  Eigen::Matrix2d h_gt = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d h_eq = Eigen::Matrix2d::Zero();
};

// Requires t >= 1 and |a|, |b| <= 30 (beyond that exp over/underflows the
// hazard arithmetic; NumericRange is thrown rather than returning garbage).
BgDerivs bg_log_derivatives(double a, double b, int t);

// log P(T > t); t = 0 gives 0. Same domain guard as above.
double bg_log_survival(double a, double b, int t);

}  // namespace autodml
