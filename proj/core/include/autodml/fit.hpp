#pragma once

#include <vector>

#include "autodml/loss.hpp"

namespace autodml {

struct NewtonConfig {
  int max_iters = 100;
  double grad_tol = 1e-10;   // infinity norm of the empirical-risk gradient
  int max_backtracks = 50;   // step-halving line search
};

struct FitConfig {
  NewtonConfig newton;
  double lambda = 0.0;  // ridge penalty on the coefficient vector
};

// Empirical risk minimizer over `space` by damped Newton from zero, with an
// LDLT solve per step (a singular step system is retried once with jitter
// delta = 1e-8 trace/p, then reported as SingularSystem). Quadratic risks
// converge on the first step, so the closed form and the iteration are the
// same code path. Throws NewtonDivergence when the gradient tolerance is not
// reached within the iteration budget.
FittedFunction fit_erm(const LossBinding& loss, SpacePtr space, const Dataset& data,
                       const std::vector<std::size_t>& rows, const FitConfig& cfg);
FittedFunction fit_erm(const LossSpec& loss, SpacePtr space, const Dataset& data,
                       const std::vector<std::size_t>& rows, const FitConfig& cfg);

struct CvResult {
  int k = 0;                   // selected sieve step, 1-based
  std::vector<double> risk;    // mean held-out risk per step; NaN if ineligible
  std::vector<char> eligible;  // step k is usable (every fold fit succeeded)
};

// Smallest step attaining the minimum held-out risk among eligible steps.
int select_sieve_step(const std::vector<double>& risk, const std::vector<char>& eligible);

// J-fold cross-validation over sieve steps 1..k_max using the plan's folds.
// A step on which any fold fails to fit (or evaluate) becomes ineligible;
// Degenerate is thrown when no step survives.
CvResult cross_validate(const LossBinding& loss, const SieveConfig& sieve, int k_max,
                        const Dataset& data, const CrossFitPlan& plan, const FitConfig& cfg);

}  // namespace autodml
