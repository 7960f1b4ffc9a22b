#include "autodml/problems.hpp"

#include <algorithm>

namespace autodml {

namespace {

SieveConfig covariate_sieve(const Dataset& data, const ProblemOptions& opts) {
  if (data.roles().covariates.empty()) {
    throw ConfigError("problem construction needs covariate roles on the dataset");
  }
  SieveConfig cfg;
  cfg.family = opts.family;
  cfg.columns = data.roles().covariates;
  cfg.ranges.assign(cfg.columns.size(), {-1.0, 1.0});
  cfg.binary.assign(cfg.columns.size(), false);
  return cfg;
}

std::string need_role(const std::string& role, const char* what) {
  if (role.empty()) throw ConfigError(std::string("problem requires the ") + what + " role");
  return role;
}

}  // namespace

ProblemSpec make_problem(const std::string& name, const Dataset& data,
                         const ProblemOptions& opts) {
  ProblemSpec p;
  p.fit = FitConfig{};
  p.k_max = opts.k_max;

  if (name == "ate_rlearner") {
    const std::string a = need_role(data.roles().treatment, "treatment");
    const std::string y = need_role(data.roles().outcome, "outcome");
    p.sieve = covariate_sieve(data, opts);
    p.theta_space = sieve_space(p.sieve, opts.k);
    p.alpha_space = p.theta_space;
    p.loss.kind = LossKind::rlearner;
    p.functional.kind = FunctionalSpec::Kind::ate_contrast;  // theta is the CATE itself
    p.nuisances.push_back({"propensity", a, p.theta_space, std::nullopt});
    p.nuisances.push_back({"mu1", y, p.theta_space, 1.0});
    p.nuisances.push_back({"mu0", y, p.theta_space, 0.0});
    return p;
  }

  if (name == "mean_outcome") {
    need_role(data.roles().outcome, "outcome");
    p.sieve = covariate_sieve(data, opts);
    p.theta_space = sieve_space(p.sieve, opts.k);
    p.alpha_space = p.theta_space;
    p.loss.kind = LossKind::squared_error;
    p.functional.kind = FunctionalSpec::Kind::mean_of_theta;
    return p;
  }

  if (name == "bg_survival") {
    const std::string a = need_role(data.roles().treatment, "treatment");
    need_role(data.roles().time, "time");
    need_role(data.roles().event, "event");
    p.sieve = covariate_sieve(data, opts);
    // Treatment enters the shape functions as one more (binary) regressor.
    p.sieve.columns.push_back(a);
    p.sieve.ranges.push_back({0.0, 1.0});
    p.sieve.binary.push_back(true);
    p.sieve.d1 = 2;
    p.theta_space = sieve_space(p.sieve, opts.k);
    p.alpha_space = p.theta_space;
    p.loss.kind = LossKind::beta_geometric_nll;
    p.loss.d1 = 2;
    p.functional.kind = FunctionalSpec::Kind::bg_survival;
    p.functional.t0 = opts.t0;
    return p;
  }

  if (name == "riesz_linear") {
    const std::string a = need_role(data.roles().treatment, "treatment");
    need_role(data.roles().outcome, "outcome");
    p.sieve = covariate_sieve(data, opts);
    // theta regresses the outcome on (treatment, covariates) additively; the
    // representer lives on the treatment-saturated covariate basis so inverse
    // propensity weights are in its span.
    p.sieve.columns.insert(p.sieve.columns.begin(), a);
    p.sieve.ranges.insert(p.sieve.ranges.begin(), {0.0, 1.0});
    p.sieve.binary.insert(p.sieve.binary.begin(), true);
    p.theta_space = sieve_space(p.sieve, opts.k);
    SieveConfig xs = covariate_sieve(data, opts);
    p.alpha_space = treatment_saturated(nested_sieve(xs, opts.k), a);
    p.loss.kind = LossKind::squared_error;
    p.functional.kind = FunctionalSpec::Kind::ate_contrast;
    p.functional.ate_mode = AteMode::contrast;
    return p;
  }

  throw ConfigError("unknown problem '" + name + "'");
}

LossSpec bind_nuisances(const ProblemSpec& problem, const Dataset& data,
                        const std::vector<std::size_t>& rows) {
  LossSpec spec = problem.loss;
  for (const auto& [name, f] : problem.known_nuisances) spec.nuisances[name] = f;
  for (const auto& recipe : problem.nuisances) {
    if (spec.nuisances.count(recipe.name)) continue;  // known function wins
    std::vector<std::size_t> fit_rows;
    if (recipe.restrict_treatment) {
      int a = data.require_col(data.roles().treatment);
      for (std::size_t r : rows)
        if (data.value(r, a) == *recipe.restrict_treatment) fit_rows.push_back(r);
      if (fit_rows.empty()) {
        throw Degenerate("no rows with treatment == " +
                         std::to_string(*recipe.restrict_treatment) +
                         " to fit nuisance '" + recipe.name + "'");
      }
    } else {
      fit_rows = rows;
    }
    LossSpec ls;
    ls.kind = LossKind::squared_error;
    ls.target = recipe.target;
    spec.nuisances[recipe.name] = fit_erm(ls, recipe.space, data, fit_rows, problem.fit);
  }
  return spec;
}

FoldFits cross_fit_nuisances(const Dataset& data, const CrossFitPlan& plan,
                             const ProblemSpec& problem) {
  FoldFits fits;
  const int J = plan.J;
  fits.eta.resize(J);
  fits.loss_by_fold.resize(J);
  fits.theta.resize(J);
  fits.alpha.resize(J);
  fits.riesz_lambda.assign(J, 0.0);

  // Stage one: nuisances per fold, bound into that fold's loss.
  for (int j = 0; j < J; ++j) {
    fits.loss_by_fold[j] = bind_nuisances(problem, data, plan.complement(j));
    fits.eta[j] = fits.loss_by_fold[j].nuisances;
  }
  LossBinding loss = fits.loss_binding(plan);

  // Stage two: theta per fold against the cross-fitted per-row losses.
  for (int j = 0; j < J; ++j) {
    if (problem.known_theta) {
      fits.theta[j] = *problem.known_theta;
    } else {
      fits.theta[j] = fit_erm(loss, problem.theta_space, data, plan.complement(j), problem.fit);
    }
  }
  FunctionBinding theta = fits.theta_binding(plan);

  // Stage three: representer per fold from the fold's Riesz system.
  for (int j = 0; j < J; ++j) {
    if (problem.known_alpha) {
      fits.alpha[j] = *problem.known_alpha;
      continue;
    }
    std::vector<std::size_t> rows = plan.complement(j);
    double lambda;
    if (problem.riesz_lambda) {
      lambda = *problem.riesz_lambda;
    } else {
      lambda = select_riesz_lambda(loss, theta, problem.functional, problem.alpha_space, data,
                                   rows, plan.seed + 1000003ull * (j + 1));
    }
    fits.riesz_lambda[j] = lambda;
    fits.alpha[j] =
        fit_riesz(loss, theta, problem.functional, problem.alpha_space, data, rows, lambda);
  }
  return fits;
}

bool estimator_needs_cross_fit(const std::string& estimator) {
  return estimator == "onestep" || estimator == "onestep_stabilized" || estimator == "tmle";
}

EstimateReport run_with_fits(const std::string& estimator, const Dataset& data,
                             const CrossFitPlan& plan, const ProblemSpec& problem,
                             const FoldFits* fits, double level, const EvalPlan* eval) {
  if (estimator == "onestep" || estimator == "onestep_stabilized") {
    if (!fits) throw ConfigError("one-step estimators need cross-fitted nuisances");
    return one_step_estimate(data, plan, problem.functional, *fits,
                             estimator == "onestep_stabilized", level, eval);
  }
  if (estimator == "tmle") {
    if (!fits) throw ConfigError("tmle needs cross-fitted nuisances");
    return tmle_estimate(data, plan, problem.functional, *fits, level, eval);
  }
  if (estimator == "autosieve" || estimator == "cv_plugin") {
    std::vector<std::size_t> train(plan.n());
    for (std::size_t i = 0; i < train.size(); ++i) train[i] = i;
    LossSpec loss = bind_nuisances(problem, data, train);
    return autosieve_estimate(data, plan, loss, problem.functional, problem.sieve, problem.k_max,
                              estimator == "autosieve", problem.fit, level, eval);
  }
  throw ConfigError("unknown estimator '" + estimator + "'");
}

EstimateReport run_estimator(const std::string& estimator, const Dataset& data,
                             const CrossFitPlan& plan, const ProblemSpec& problem,
                             double level, const EvalPlan* eval) {
  if (estimator_needs_cross_fit(estimator)) {
    FoldFits fits = cross_fit_nuisances(data, plan, problem);
    return run_with_fits(estimator, data, plan, problem, &fits, level, eval);
  }
  return run_with_fits(estimator, data, plan, problem, nullptr, level, eval);
}

}  // namespace autodml
