#pragma once

#include <optional>
#include <string>

#include "autodml/normal.hpp"
#include "autodml/riesz.hpp"

namespace autodml {

// Per-fold fits produced by cross-fitting: nuisances eta, the M-estimand
// theta, and the Riesz representer alpha, one of each per fold, with the
// fold's loss (eta bound in) alongside.
struct FoldFits {
  std::vector<std::map<std::string, FittedFunction>> eta;
  std::vector<LossSpec> loss_by_fold;
  std::vector<FittedFunction> theta;
  std::vector<FittedFunction> alpha;
  std::vector<double> riesz_lambda;  // ridge level used per fold (diagnostic)

  LossBinding loss_binding(const CrossFitPlan& plan) const;
  FunctionBinding theta_binding(const CrossFitPlan& plan) const;
  FunctionBinding alpha_binding(const CrossFitPlan& plan) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct EstimateReport {
  std::string estimator;
  double psi_hat = 0.0;
  double se = 0.0;
  Interval ci;
  double level = 0.95;
  std::size_t n = 0;
  Eigen::VectorXd influence;
  std::optional<double> plug_in;
  std::optional<double> epsilon;  // stabilization or targeting coefficient
  std::optional<int> k_theta, k_alpha, k;
  std::vector<std::string> warnings;
  std::string config_json;  // resolved run configuration, filled by the CLI
};

std::string report_to_json(const EstimateReport& rep);

// The rows an estimator averages over and, per row, the fold whose fits the
// row draws on. The default pairing is the plan's own assignment; sample
// splitting supplies held-out rows, dealt round-robin across folds.
struct EvalPlan {
  std::vector<std::size_t> rows;
  std::vector<int> fold;
};
EvalPlan eval_all(const CrossFitPlan& plan);
EvalPlan eval_split(const std::vector<std::size_t>& rows, int J);

// One-step estimator: psi = P_n m(Z, theta_j) - P_n grad l(theta_j)' alpha_j,
// influence chi_i = m_i - P_n m - grad l' alpha. With stabilize, alpha is
// first rescaled by stabilization_factor; a degenerate factor falls back to 1
// with a warning rather than failing the run.
EstimateReport one_step_estimate(const Dataset& data, const CrossFitPlan& plan,
                                 const FunctionalSpec& func, const FoldFits& fits,
                                 bool stabilize, double level = 0.95,
                                 const EvalPlan* eval = nullptr);

// The ratio sum dm(z_i, alpha_j) / sum alpha_j' H alpha_j. Throws Degenerate
// when the denominator is not positive or the factor is wild (|eps-1| > 10).
double stabilization_factor(const Dataset& data, const CrossFitPlan& plan,
                            const FunctionalSpec& func, const FoldFits& fits,
                            const EvalPlan* eval = nullptr);

// Pooled targeting coefficient: the eps solving
//   sum grad l(theta_j + eps alpha_j)' alpha_j (z_i) = 0
// over the evaluation rows. Closed form for quadratic risks; otherwise a
// safeguarded bisection on [-10, 10] to |score| < 1e-10 n (NoBracket when the
// score does not change sign there). alpha identically zero gives 0.
double solve_fluctuation(const Dataset& data, const std::vector<std::size_t>& rows,
                         const std::vector<int>& fold, const FoldFits& fits);

// Targeted estimator: theta*_j = theta_j + eps alpha_j with the pooled eps,
// psi = P_n m(Z, theta*_j), influence centered at psi with the score term at
// theta*.
EstimateReport tmle_estimate(const Dataset& data, const CrossFitPlan& plan,
                             const FunctionalSpec& func, const FoldFits& fits,
                             double level = 0.95, const EvalPlan* eval = nullptr);

// Sieve plug-in estimator. Step k_theta is chosen by cross-validation of the
// loss; representers are then fit per step with theta frozen at the k_theta
// fit, and k_alpha minimizes held-out Riesz risk. undersmooth=true takes
// k = max(k_theta, k_alpha) (plain plug-in takes k_theta), refits theta on
// all training rows at step k, and reports psi = P_n m with the plug-in
// influence chi_i = m_i - psi - grad l(theta)' alpha.
EstimateReport autosieve_estimate(const Dataset& data, const CrossFitPlan& plan,
                                  const LossSpec& loss, const FunctionalSpec& func,
                                  const SieveConfig& sieve, int k_max, bool undersmooth,
                                  const FitConfig& cfg, double level = 0.95,
                                  const EvalPlan* eval = nullptr);

// Fills se and ci from the influence values already in the report; flags
// DegenerateVariance (warning) when the variance estimate is zero.
void wald_interval(EstimateReport& rep);

}  // namespace autodml
