#include "autodml/estimators.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace autodml {

LossBinding FoldFits::loss_binding(const CrossFitPlan& plan) const {
  return LossBinding::per_fold_of(loss_by_fold, &plan);
}
FunctionBinding FoldFits::theta_binding(const CrossFitPlan& plan) const {
  return FunctionBinding::per_fold_of(theta, &plan);
}
FunctionBinding FoldFits::alpha_binding(const CrossFitPlan& plan) const {
  return FunctionBinding::per_fold_of(alpha, &plan);
}

EvalPlan eval_all(const CrossFitPlan& plan) {
  EvalPlan ep;
  ep.rows.resize(plan.n());
  ep.fold.resize(plan.n());
  for (std::size_t i = 0; i < plan.n(); ++i) {
    ep.rows[i] = i;
    ep.fold[i] = plan.assignment[i];
  }
  return ep;
}

EvalPlan eval_split(const std::vector<std::size_t>& rows, int J) {
  EvalPlan ep;
  ep.rows = rows;
  ep.fold.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) ep.fold[i] = static_cast<int>(i % static_cast<std::size_t>(J));
  return ep;
}

namespace {

// Everything the correction terms need, row by row: the functional value m_i,
// the score-times-representer g' alpha, and (for stabilization/targeting) the
// representer's functional derivative and quadratic form.
struct RowTerms {
  Eigen::VectorXd m;       // m(z_i, theta_j)
  Eigen::VectorXd corr;    // grad l(theta_j)' alpha_j (z_i)
  Eigen::VectorXd mdot;    // dm(z_i, alpha_j)
  Eigen::VectorXd quad;    // alpha_j' H(theta_j) alpha_j (z_i)
};

RowTerms row_terms(const Dataset& data, const EvalPlan& ep, const FunctionalSpec& func,
                   const FoldFits& fits, const std::vector<FittedFunction>& alpha) {
  const std::size_t m = ep.rows.size();
  RowTerms t;
  t.m.resize(m);
  t.corr.resize(m);
  t.mdot.resize(m);
  t.quad.resize(m);
  Obs z{&data, 0};
  for (std::size_t i = 0; i < m; ++i) {
    z.row = ep.rows[i];
    const int j = ep.fold[i];
    const LossSpec& spec = fits.loss_by_fold[j];
    const FittedFunction& th = fits.theta[j];
    const FittedFunction& al = alpha[j];
    LossCtx ctx = make_loss_ctx(spec, z);
    Eigen::VectorXd u = evaluate(th, z);
    Eigen::VectorXd av = evaluate(al, z);
    Eigen::VectorXd g = loss_point_gradient(spec, ctx, u);
    Eigen::MatrixXd h = loss_point_hessian(spec, ctx, u);
    t.m[i] = functional_value(func, th, z);
    t.corr[i] = g.dot(av);
    t.mdot[i] = functional_derivative(func, th, z, al);
    t.quad[i] = av.dot(h * av);
  }
  return t;
}

void check_eval(const EvalPlan& ep, const FoldFits& fits) {
  if (ep.rows.empty()) throw DomainError("estimator invoked with no evaluation rows");
  for (int j : ep.fold) {
    if (j < 0 || j >= static_cast<int>(fits.theta.size())) {
      throw DomainError("evaluation plan references fold " + std::to_string(j) +
                        " outside the fitted range");
    }
  }
}

double stabilization_from_terms(const RowTerms& t) {
  const double num = t.mdot.sum();
  const double den = t.quad.sum();
  if (!(den > 0.0)) {
    throw Degenerate("stabilization denominator sum alpha'H alpha = " + std::to_string(den) +
                     " is not positive");
  }
  const double eps = num / den;
  if (std::abs(eps - 1.0) > 10.0) {
    throw Degenerate("stabilization factor " + std::to_string(eps) + " is out of range");
  }
  return eps;
}

bool quadratic_kind(LossKind k) {
  switch (k) {
    case LossKind::squared_error:
    case LossKind::pseudo_outcome:
    case LossKind::rlearner:
    case LossKind::drlearner:
    case LossKind::riesz_quadratic:
      return true;
    case LossKind::ortho_logistic:
    case LossKind::beta_geometric_nll:
      return false;
  }
  return false;
}

}  // namespace

EstimateReport one_step_estimate(const Dataset& data, const CrossFitPlan& plan,
                                 const FunctionalSpec& func, const FoldFits& fits,
                                 bool stabilize, double level, const EvalPlan* eval) {
  EvalPlan ep = eval ? *eval : eval_all(plan);
  check_eval(ep, fits);
  RowTerms t = row_terms(data, ep, func, fits, fits.alpha);

  EstimateReport rep;
  rep.estimator = stabilize ? "onestep_stabilized" : "onestep";
  rep.level = level;
  rep.n = ep.rows.size();

  double scale = 1.0;
  if (stabilize) {
    try {
      scale = stabilization_from_terms(t);
    } catch (const Degenerate& e) {
      rep.warnings.push_back(std::string("stabilization fell back to 1: ") + e.what());
      scale = 1.0;
    }
    rep.epsilon = scale;
  }

  const double inv_n = 1.0 / static_cast<double>(rep.n);
  const double plug = t.m.sum() * inv_n;
  rep.plug_in = plug;
  rep.psi_hat = plug - scale * t.corr.sum() * inv_n;
  rep.influence = t.m.array() - plug - scale * t.corr.array();
  wald_interval(rep);
  return rep;
}

double stabilization_factor(const Dataset& data, const CrossFitPlan& plan,
                            const FunctionalSpec& func, const FoldFits& fits,
                            const EvalPlan* eval) {
  EvalPlan ep = eval ? *eval : eval_all(plan);
  check_eval(ep, fits);
  return stabilization_from_terms(row_terms(data, ep, func, fits, fits.alpha));
}

double solve_fluctuation(const Dataset& data, const std::vector<std::size_t>& rows,
                         const std::vector<int>& fold, const FoldFits& fits) {
  if (rows.empty()) throw DomainError("solve_fluctuation with no rows");
  const std::size_t m = rows.size();

  bool alpha_zero = true;
  for (const auto& a : fits.alpha) {
    for (const auto& term : a.terms)
      for (const auto& c : term.coeffs)
        if (term.weight != 0.0 && c.cwiseAbs().maxCoeff() > 0.0) alpha_zero = false;
  }
  if (alpha_zero) return 0.0;

  bool quadratic = true;
  for (const auto& spec : fits.loss_by_fold)
    if (!quadratic_kind(spec.kind)) quadratic = false;

  const double tol = 1e-10 * std::max<double>(1.0, static_cast<double>(m));

  // score(eps) = sum_i grad l(theta_j + eps alpha_j)' alpha_j. For quadratic
  // risks the score is affine in eps: score(eps) = s0 + eps s1 with
  // s1 = sum alpha'H alpha.
  auto score_at = [&](double eps) {
    double s = 0.0;
    Obs z{&data, 0};
    for (std::size_t i = 0; i < m; ++i) {
      z.row = rows[i];
      const int j = fold[i];
      const LossSpec& spec = fits.loss_by_fold[j];
      LossCtx ctx = make_loss_ctx(spec, z);
      Eigen::VectorXd av = evaluate(fits.alpha[j], z);
      Eigen::VectorXd u = evaluate(fits.theta[j], z) + eps * av;
      s += loss_point_gradient(spec, ctx, u).dot(av);
    }
    return s;
  };

  if (quadratic) {
    double s0 = score_at(0.0);
    double s1 = 0.0;
    {
      Obs z{&data, 0};
      for (std::size_t i = 0; i < m; ++i) {
        z.row = rows[i];
        const int j = fold[i];
        const LossSpec& spec = fits.loss_by_fold[j];
        LossCtx ctx = make_loss_ctx(spec, z);
        Eigen::VectorXd av = evaluate(fits.alpha[j], z);
        Eigen::VectorXd u = evaluate(fits.theta[j], z);
        s1 += av.dot(loss_point_hessian(spec, ctx, u) * av);
      }
    }
    if (s1 == 0.0) {
      if (std::abs(s0) <= tol) return 0.0;
      throw NoBracket("quadratic fluctuation has zero curvature but nonzero score");
    }
    return -s0 / s1;
  }

  double s_mid = score_at(0.0);
  if (std::abs(s_mid) <= tol) return 0.0;

  // Endpoints of the bracket; when a bold step leaves the loss's numeric
  // domain, walk it back toward zero rather than giving up outright.
  auto finite_endpoint = [&](double e) {
    for (int i = 0; i < 40; ++i) {
      try {
        return std::pair<double, double>(e, score_at(e));
      } catch (const NumericRange&) {
        e *= 0.5;
      }
    }
    throw NoBracket("could not evaluate the fluctuation score near the bracket edge");
  };
  auto [lo, s_lo] = finite_endpoint(-10.0);
  auto [hi, s_hi] = finite_endpoint(10.0);
  if (s_lo * s_hi > 0.0) {
    throw NoBracket("fluctuation score does not change sign on [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "]");
  }
  for (int iter = 0; iter < 300; ++iter) {
    double mid = 0.5 * (lo + hi);
    double s = score_at(mid);
    if (std::abs(s) <= tol || hi - lo < 1e-15) return mid;
    if ((s_lo < 0.0) == (s < 0.0)) {
      lo = mid;
      s_lo = s;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

EstimateReport tmle_estimate(const Dataset& data, const CrossFitPlan& plan,
                             const FunctionalSpec& func, const FoldFits& fits,
                             double level, const EvalPlan* eval) {
  EvalPlan ep = eval ? *eval : eval_all(plan);
  check_eval(ep, fits);
  const double eps = solve_fluctuation(data, ep.rows, ep.fold, fits);

  FoldFits targeted = fits;
  for (std::size_t j = 0; j < fits.theta.size(); ++j)
    targeted.theta[j] = combine(fits.theta[j], eps, fits.alpha[j]);

  RowTerms t = row_terms(data, ep, func, targeted, targeted.alpha);

  EstimateReport rep;
  rep.estimator = "tmle";
  rep.level = level;
  rep.n = ep.rows.size();
  rep.epsilon = eps;
  const double inv_n = 1.0 / static_cast<double>(rep.n);
  rep.psi_hat = t.m.sum() * inv_n;
  rep.plug_in = rep.psi_hat;
  rep.influence = t.m.array() - rep.psi_hat - t.corr.array();
  wald_interval(rep);
  return rep;
}

EstimateReport autosieve_estimate(const Dataset& data, const CrossFitPlan& plan,
                                  const LossSpec& loss, const FunctionalSpec& func,
                                  const SieveConfig& sieve, int k_max, bool undersmooth,
                                  const FitConfig& cfg, double level, const EvalPlan* eval) {
  FitConfig erm_cfg = cfg;
  erm_cfg.lambda = 0.0;  // the sieve itself is the regularizer here

  std::vector<std::size_t> train(plan.n());
  for (std::size_t i = 0; i < train.size(); ++i) train[i] = i;

  CvResult cv = cross_validate(LossBinding::shared(loss), sieve, k_max, data, plan, erm_cfg);
  const int k_theta = cv.k;
  FittedFunction theta_sel = fit_erm(loss, sieve_space(sieve, k_theta), data, train, erm_cfg);

  int k_alpha = k_theta;
  int k = k_theta;
  if (undersmooth) {
    // Held-out Riesz risk per step, theta frozen at the selected fit.
    std::vector<double> risk(k_max, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> ok(k_max, 0);
    auto lb = LossBinding::shared(loss);
    auto tb = FunctionBinding::shared(theta_sel);
    for (int kk = 1; kk <= k_max; ++kk) {
      double total = 0.0;
      bool good = true;
      for (int j = 0; j < plan.J && good; ++j) {
        try {
          FittedFunction a =
              fit_riesz(lb, tb, func, sieve_space(sieve, kk), data, plan.complement(j), 0.0);
          total += riesz_risk(lb, tb, func, a, data, plan.folds[j]) *
                   static_cast<double>(plan.folds[j].size());
        } catch (const Error&) {
          good = false;
        }
      }
      if (good) {
        risk[kk - 1] = total / static_cast<double>(plan.n());
        ok[kk - 1] = 1;
      }
    }
    k_alpha = select_sieve_step(risk, ok);
    k = std::max(k_theta, k_alpha);
  }

  FittedFunction theta_fin =
      k == k_theta ? theta_sel : fit_erm(loss, sieve_space(sieve, k), data, train, erm_cfg);
  FittedFunction alpha_fin = fit_riesz(LossBinding::shared(loss), FunctionBinding::shared(theta_sel),
                                       func, sieve_space(sieve, k), data, train, 0.0);

  const std::vector<std::size_t>& rows = eval ? eval->rows : train;

  EstimateReport rep;
  rep.estimator = undersmooth ? "autosieve" : "cv_plugin";
  rep.level = level;
  rep.n = rows.size();
  rep.k_theta = k_theta;
  if (undersmooth) rep.k_alpha = k_alpha;
  rep.k = k;

  Eigen::VectorXd mval(rows.size()), corr(rows.size());
  Obs z{&data, 0};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    z.row = rows[i];
    LossCtx ctx = make_loss_ctx(loss, z);
    Eigen::VectorXd u = evaluate(theta_fin, z);
    mval[i] = functional_value(func, theta_fin, z);
    corr[i] = loss_point_gradient(loss, ctx, u).dot(evaluate(alpha_fin, z));
  }
  rep.psi_hat = mval.mean();
  rep.plug_in = rep.psi_hat;
  rep.influence = mval.array() - rep.psi_hat - corr.array();
  wald_interval(rep);
  return rep;
}

void wald_interval(EstimateReport& rep) {
  const std::size_t n = static_cast<std::size_t>(rep.influence.size());
  if (n == 0) throw DomainError("wald_interval with an empty influence vector");
  rep.se = std::sqrt(rep.influence.squaredNorm()) / static_cast<double>(n);
  if (!(rep.se > 0.0) || !std::isfinite(rep.se)) {
    rep.warnings.push_back("DegenerateVariance: influence values give zero variance");
    rep.se = std::isfinite(rep.se) ? rep.se : 0.0;
    rep.ci = {rep.psi_hat, rep.psi_hat};
    return;
  }
  const double q = normal_quantile(0.5 * (1.0 + rep.level));
  rep.ci = {rep.psi_hat - q * rep.se, rep.psi_hat + q * rep.se};
}

std::string report_to_json(const EstimateReport& rep) {
  nlohmann::json j;
  j["estimator"] = rep.estimator;
  j["psi_hat"] = rep.psi_hat;
  j["se"] = rep.se;
  j["ci"] = {{"lo", rep.ci.lo}, {"hi", rep.ci.hi}};
  j["level"] = rep.level;
  j["n"] = rep.n;
  j["influence"] = std::vector<double>(rep.influence.begin(), rep.influence.end());
  nlohmann::json diag;
  if (rep.plug_in) diag["plug_in"] = *rep.plug_in;
  if (rep.epsilon) diag["epsilon"] = *rep.epsilon;
  if (rep.k_theta) diag["k_theta"] = *rep.k_theta;
  if (rep.k_alpha) diag["k_alpha"] = *rep.k_alpha;
  if (rep.k) diag["k"] = *rep.k;
  diag["warnings"] = rep.warnings;
  j["diagnostics"] = diag;
  if (!rep.config_json.empty()) j["config"] = nlohmann::json::parse(rep.config_json);
  return j.dump(2);
}

}  // namespace autodml
