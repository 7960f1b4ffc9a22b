#pragma once

#include <memory>

#include <Eigen/Dense>

#include "autodml/bg.hpp"
#include "autodml/fitted.hpp"

namespace autodml {

// How the ATE contrast interprets theta. In contrast mode m(z, theta) =
// theta(1,x) - theta(0,x); in identity mode theta already is the per-x effect
// and m(z, theta) = theta(x). auto_detect picks contrast exactly when theta
// references the treatment column, which covers the stock problems; pass an
// explicit mode when theta is degenerate (a known-zero theta, say) and the
// detection has nothing to look at.
enum class AteMode { auto_detect, contrast, identity };

// A linear (or smooth) scalar functional of theta, averaged by the
// estimators: psi = P_n m(Z, theta).
struct FunctionalSpec {
  enum class Kind { mean_of_theta, ate_contrast, bg_survival, linear_custom };
  Kind kind = Kind::mean_of_theta;
  int t0 = 12;                                   // bg_survival horizon
  AteMode ate_mode = AteMode::auto_detect;
  std::shared_ptr<const FittedFunction> weight;  // linear_custom: v(z) dot theta(z)
};

// True when this functional differentiates through the counterfactual
// contrast for the given theta (ate_contrast in contrast mode).
bool is_contrast(const FunctionalSpec& m, const FittedFunction& theta, const Dataset& data);

double functional_value(const FunctionalSpec& m, const FittedFunction& theta, const Obs& z);

// Derivative of theta -> m(z, theta) in the direction h (exact for the linear
// kinds, the pathwise derivative for bg_survival).
double functional_derivative(const FunctionalSpec& m, const FittedFunction& theta,
                             const Obs& z, const FittedFunction& h);

// For pointwise functionals m(z, theta) = v(z) dot theta(z) (+ const), the
// weight v(z) evaluated at theta for the linearization point; bg_survival
// returns S * grad log S. Throws DomainError in contrast mode, which is not
// pointwise in theta(z).
Eigen::VectorXd functional_weight(const FunctionalSpec& m, const FittedFunction& theta,
                                  const Obs& z, int d1);

// Coefficients of h -> dm(z, theta)(h) on a basis: entry j is the derivative
// in the direction of basis function j of `space` (blocks concatenated).
Eigen::VectorXd functional_design_row(const FunctionalSpec& m, const FittedFunction& theta,
                                      const FunctionSpace& space, const Obs& z);

}  // namespace autodml
