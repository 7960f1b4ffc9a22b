#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autodml/folds.hpp"
#include "autodml/functional.hpp"

namespace autodml {

enum class LossKind {
  squared_error,
  pseudo_outcome,
  rlearner,
  drlearner,
  riesz_quadratic,
  ortho_logistic,
  beta_geometric_nll
};

// A pointwise loss z -> l_eta(z, theta(z)) with analytic gradient and Hessian
// in the function value u = theta(z). Nuisances eta are bound by name:
//   squared_error      none                      (target column, default outcome)
//   pseudo_outcome     "weight", "pseudo"        l = w/2 (zeta - u)^2
//   rlearner           "propensity", "baseline"  l = 1/2 ((y-m0) - (a-pi)u)^2
//                      (without "baseline": m0 = pi mu1 + (1-pi) mu0 from
//                       "mu1"/"mu0", tying its error to the propensity's)
//   drlearner          "propensity", "mu1", "mu0"  pseudo-outcome with w = 1
//   ortho_logistic     "propensity", "mu1", "mu0"  weighted cross-entropy
//   beta_geometric_nll none                      (time/event roles; u = (a,b))
//   riesz_quadratic    quadratic expansion of `base` at theta_bar, minus the
//                      linearized functional; pointwise functionals only
struct LossSpec {
  LossKind kind = LossKind::squared_error;
  int d1 = 1;
  std::string target;  // squared_error: column to regress; empty = outcome role
  std::map<std::string, FittedFunction> nuisances;

  std::shared_ptr<const LossSpec> base;             // riesz_quadratic
  std::shared_ptr<const FittedFunction> theta_bar;  // riesz_quadratic
  std::shared_ptr<const FunctionalSpec> functional; // riesz_quadratic
};

// Per-observation pieces precomputed once per (loss, row); the hot loops in
// the fitters re-evaluate only the u-dependence.
struct LossCtx {
  double y = 0.0;
  double a = 0.0;
  int t = 1;
  double event1 = 1.0;
  double pi = 0.5, m0 = 0.0;
  double w = 1.0, zeta = 0.0;
  double nu = 0.25, h0 = 0.0;
  Eigen::MatrixXd Hq;  // riesz_quadratic
  Eigen::VectorXd vq;  // riesz_quadratic
};

LossCtx make_loss_ctx(const LossSpec& loss, const Obs& z);

double loss_point_value(const LossSpec& loss, const LossCtx& c, const Eigen::VectorXd& u);
Eigen::VectorXd loss_point_gradient(const LossSpec& loss, const LossCtx& c,
                                    const Eigen::VectorXd& u);
Eigen::MatrixXd loss_point_hessian(const LossSpec& loss, const LossCtx& c,
                                   const Eigen::VectorXd& u);

// Observation-level API: u = theta(z).
double loss_value(const LossSpec& loss, const FittedFunction& theta, const Obs& z);
Eigen::VectorXd loss_gradient(const LossSpec& loss, const FittedFunction& theta, const Obs& z);
Eigen::MatrixXd loss_hessian(const LossSpec& loss, const FittedFunction& theta, const Obs& z);

// A value that may differ by fold. Size-1 means shared across all rows;
// otherwise entry j applies to the rows of fold j under `plan`, which is how
// cross-fitted nuisances flow through the fitting and estimation paths.
template <class T>
struct ByFold {
  std::vector<T> per_fold;
  const CrossFitPlan* plan = nullptr;

  static ByFold shared(T v) {
    ByFold b;
    b.per_fold.push_back(std::move(v));
    return b;
  }
  static ByFold per_fold_of(std::vector<T> v, const CrossFitPlan* p) {
    ByFold b;
    b.per_fold = std::move(v);
    b.plan = p;
    return b;
  }
  const T& at_row(std::size_t i) const {
    if (per_fold.size() == 1) return per_fold.front();
    return per_fold[static_cast<std::size_t>(plan->assignment[i])];
  }
  const T& front() const { return per_fold.front(); }
  bool shared_only() const { return per_fold.size() == 1; }
};

using LossBinding = ByFold<LossSpec>;
using FunctionBinding = ByFold<FittedFunction>;

std::vector<LossCtx> make_loss_ctxs(const LossBinding& loss, const Dataset& data,
                                    const std::vector<std::size_t>& rows);

// (1/m) sum of losses over the rows. theta may vary by fold the same way the
// loss does. The ridge penalty, when one is in force, lives in the fitter.
double empirical_risk(const LossBinding& loss, const FunctionBinding& theta,
                      const Dataset& data, const std::vector<std::size_t>& rows);

}  // namespace autodml
