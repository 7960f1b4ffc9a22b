#pragma once

#include "autodml/estimators.hpp"

namespace autodml {

// A nuisance regression fit per fold before the loss is used: least squares
// of `target` on `space`, optionally restricted to rows with a given
// treatment value (outcome-regression arms).
struct NuisanceRecipe {
  std::string name;    // key the loss looks the fit up under
  std::string target;  // column to regress
  SpacePtr space;
  std::optional<double> restrict_treatment;
};

// Everything needed to run the estimators on one dataset: the loss, the
// functional, spaces for theta and alpha, nuisance recipes, and the sieve the
// adaptive estimators grow. Known-function injection replaces the matching
// fits wholesale, which tests use to pin oracles.
struct ProblemSpec {
  LossSpec loss;
  FunctionalSpec functional;
  SpacePtr theta_space;
  SpacePtr alpha_space;
  std::vector<NuisanceRecipe> nuisances;
  SieveConfig sieve;
  int k_max = 4;
  FitConfig fit;
  std::optional<double> riesz_lambda;  // fixed ridge level; unset = inner CV
  std::map<std::string, FittedFunction> known_nuisances;
  std::optional<FittedFunction> known_theta;
  std::optional<FittedFunction> known_alpha;
};

struct ProblemOptions {
  int k = 3;      // sieve step for the fixed-space estimators
  int k_max = 4;  // largest step the adaptive estimators may take
  int t0 = 12;    // bg_survival horizon
  Family family = Family::polynomial;
};

// Stock problems: ate_rlearner, mean_outcome, bg_survival, riesz_linear.
// Spaces are built from the dataset's roles. Throws ConfigError for an
// unknown name.
ProblemSpec make_problem(const std::string& name, const Dataset& data,
                         const ProblemOptions& opts);

// Algorithm-1 cross-fitting: per fold, fit the nuisance recipes on the
// complement, bind them into the loss, fit theta against the cross-fitted
// per-row losses, then fit the representer on the fold's training rows.
// Known functions short-circuit the matching stage.
FoldFits cross_fit_nuisances(const Dataset& data, const CrossFitPlan& plan,
                             const ProblemSpec& problem);

// Dispatch by estimator name: onestep, onestep_stabilized, tmle (these
// consume `fits`), autosieve, cv_plugin (these refit from scratch on the
// training rows). Throws ConfigError for an unknown name.
EstimateReport run_with_fits(const std::string& estimator, const Dataset& data,
                             const CrossFitPlan& plan, const ProblemSpec& problem,
                             const FoldFits* fits, double level,
                             const EvalPlan* eval = nullptr);
EstimateReport run_estimator(const std::string& estimator, const Dataset& data,
                             const CrossFitPlan& plan, const ProblemSpec& problem,
                             double level, const EvalPlan* eval = nullptr);

bool estimator_needs_cross_fit(const std::string& estimator);

// Full-data nuisance binding used by the adaptive estimators: recipes fit
// once on the given rows, results bound into a copy of the problem's loss.
LossSpec bind_nuisances(const ProblemSpec& problem, const Dataset& data,
                        const std::vector<std::size_t>& rows);

}  // namespace autodml
