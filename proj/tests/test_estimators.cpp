#include "doctest.h"
#include "json.hpp"

#include "autodml/estimators.hpp"
#include "helpers.hpp"
#include "probes.hpp"

using namespace autodml;

namespace {

SpacePtr saturated_linear() {
  SieveConfig cfg;
  cfg.columns = {"x"};
  cfg.ranges = {{-1.0, 1.0}};
  cfg.binary = {false};
  return treatment_saturated(nested_sieve(cfg, 1), "a");
}

FittedFunction random_on(SpacePtr space, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Eigen::VectorXd> coeffs;
  for (int b = 0; b < space->d1(); ++b) {
    Eigen::VectorXd c(space->block_dim(b));
    for (int j = 0; j < c.size(); ++j) c(j) = rng.uniform(lo, hi);
    coeffs.push_back(std::move(c));
  }
  return make_fitted(space, coeffs);
}

struct AipwFixture {
  Dataset data;
  CrossFitPlan plan;
  FoldFits fits;
  FunctionalSpec func;
};

AipwFixture make_aipw_fixture(std::uint64_t seed) {
  Rng rng(seed);
  std::size_t n = 30 + rng.below(30);
  int J = 2 + static_cast<int>(rng.below(2));
  AipwFixture fx{testutil::probe_xy_data(n, seed + 17, false),
                 make_folds(n, J, seed + 37),
                 {},
                 {}};
  fx.func.kind = FunctionalSpec::Kind::ate_contrast;
  SpacePtr sat = saturated_linear();
  fx.fits.eta.resize(J);
  fx.fits.riesz_lambda.assign(J, 0.0);
  for (int j = 0; j < J; ++j) {
    fx.fits.loss_by_fold.push_back(LossSpec{});  // squared error on the outcome
    fx.fits.theta.push_back(random_on(sat, rng));
    fx.fits.alpha.push_back(random_on(sat, rng));
  }
  return fx;
}

double hand_aipw(const AipwFixture& fx) {
  const Dataset& d = fx.data;
  int a = d.col_index("a"), yc = d.col_index("y");
  double m_sum = 0.0, corr_sum = 0.0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    int j = fx.plan.assignment[i];
    Obs z{&d, i};
    double m1 = evaluate1(fx.fits.theta[j], z.with(a, 1.0));
    double m0 = evaluate1(fx.fits.theta[j], z.with(a, 0.0));
    m_sum += m1 - m0;
    corr_sum += (evaluate1(fx.fits.theta[j], z) - z.value(yc)) * evaluate1(fx.fits.alpha[j], z);
  }
  double n = static_cast<double>(d.n_rows());
  return m_sum / n - corr_sum / n;
}

}  // namespace

TEST_CASE("one-step estimator equals the explicit AIPW expression") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    AipwFixture fx = make_aipw_fixture(seed);
    EstimateReport rep = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, false);
    CHECK(std::abs(rep.psi_hat - hand_aipw(fx)) < 1e-12);
    CHECK(rep.n == fx.data.n_rows());
    CHECK(rep.plug_in.has_value());
  }
}

TEST_CASE("one-step influence is centered at the plug-in and prices the CI") {
  AipwFixture fx = make_aipw_fixture(5);
  EstimateReport rep = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, false, 0.9);
  const Dataset& d = fx.data;
  int a = d.col_index("a"), yc = d.col_index("y");
  double n = static_cast<double>(d.n_rows());
  double plug = 0.0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z{&d, i};
    int j = fx.plan.assignment[i];
    plug += (evaluate1(fx.fits.theta[j], z.with(a, 1.0)) -
             evaluate1(fx.fits.theta[j], z.with(a, 0.0))) /
            n;
  }
  CHECK(*rep.plug_in == doctest::Approx(plug).epsilon(1e-12));
  REQUIRE(rep.influence.size() == d.n_rows());
  for (std::size_t i = 0; i < 5; ++i) {
    Obs z{&d, i};
    int j = fx.plan.assignment[i];
    double m = evaluate1(fx.fits.theta[j], z.with(a, 1.0)) -
               evaluate1(fx.fits.theta[j], z.with(a, 0.0));
    double corr =
        (evaluate1(fx.fits.theta[j], z) - z.value(yc)) * evaluate1(fx.fits.alpha[j], z);
    CHECK(rep.influence(i) == doctest::Approx(m - plug - corr).epsilon(1e-10));
  }
  double se = rep.influence.norm() / n;
  CHECK(rep.se == doctest::Approx(se).epsilon(1e-12));
  double q = normal_quantile(0.95);  // (1 + 0.9) / 2
  CHECK(rep.ci.lo == doctest::Approx(rep.psi_hat - q * se).epsilon(1e-12));
  CHECK(rep.ci.hi == doctest::Approx(rep.psi_hat + q * se).epsilon(1e-12));
  CHECK(rep.level == doctest::Approx(0.9));
}

TEST_CASE("in-sample unpenalized representers stabilize to exactly one") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 131);
    std::size_t n = 40 + rng.below(40);
    Dataset d = testutil::probe_xy_data(n, seed + 900, false);
    CrossFitPlan plan = make_folds(n, 2, seed);

    SieveConfig cfg;
    cfg.columns = {"x"};
    cfg.ranges = {{-1.0, 1.0}};
    cfg.binary = {false};
    SpacePtr space = sieve_space(cfg, 1 + static_cast<int>(rng.below(3)));
    FunctionalSpec func;  // mean of theta

    FittedFunction theta = random_on(space, rng);
    FittedFunction alpha = fit_riesz(LossBinding::shared(LossSpec{}),
                                     FunctionBinding::shared(theta), func, space, d,
                                     all_rows(d), 0.0);
    FoldFits fits;
    fits.eta.resize(2);
    fits.riesz_lambda.assign(2, 0.0);
    for (int j = 0; j < 2; ++j) {
      fits.loss_by_fold.push_back(LossSpec{});
      fits.theta.push_back(theta);
      fits.alpha.push_back(alpha);
    }
    double eps = stabilization_factor(d, plan, func, fits);
    CHECK(std::abs(eps - 1.0) < 1e-10);
  }
}

TEST_CASE("stabilized one-step rescales the correction by the factor") {
  AipwFixture fx = make_aipw_fixture(8);
  fx.func = FunctionalSpec{};  // mean of theta keeps the factor well-behaved
  for (auto& a : fx.fits.alpha) {
    a = combine(constant_function(1.0), 0.3, a);  // keep alpha away from zero
  }
  double eps = stabilization_factor(fx.data, fx.plan, fx.func, fx.fits);
  EstimateReport plain = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, false);
  EstimateReport stab = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, true);
  REQUIRE(stab.epsilon.has_value());
  CHECK(*stab.epsilon == doctest::Approx(eps).epsilon(1e-12));
  double corr_plain = *plain.plug_in - plain.psi_hat;
  double corr_stab = *stab.plug_in - stab.psi_hat;
  CHECK(corr_stab == doctest::Approx(eps * corr_plain).epsilon(1e-10));
  CHECK(stab.warnings.empty());
}

TEST_CASE("degenerate stabilization falls back to one with a warning") {
  AipwFixture fx = make_aipw_fixture(9);
  for (auto& a : fx.fits.alpha) a = zero_function(1);  // denominator collapses
  CHECK_THROWS_AS((void)stabilization_factor(fx.data, fx.plan, fx.func, fx.fits), Degenerate);
  EstimateReport rep = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, true);
  REQUIRE(rep.epsilon.has_value());
  CHECK(*rep.epsilon == doctest::Approx(1.0));
  REQUIRE_FALSE(rep.warnings.empty());
  CHECK(rep.warnings.front().find("stabilization fell back") != std::string::npos);
}

TEST_CASE("tmle zeroes the pooled score and centers its influence") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    AipwFixture fx = make_aipw_fixture(seed + 40);
    EstimateReport rep = tmle_estimate(fx.data, fx.plan, fx.func, fx.fits);
    REQUIRE(rep.epsilon.has_value());
    double eps = *rep.epsilon;

    const Dataset& d = fx.data;
    int yc = d.col_index("y");
    double n = static_cast<double>(d.n_rows());
    double score = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      Obs z{&d, i};
      int j = fx.plan.assignment[i];
      FittedFunction tstar = combine(fx.fits.theta[j], eps, fx.fits.alpha[j]);
      score += (evaluate1(tstar, z) - z.value(yc)) * evaluate1(fx.fits.alpha[j], z) / n;
    }
    CHECK(std::abs(score) < 1e-8);
    CHECK(std::abs(rep.influence.mean()) < 1e-10);
  }
}

TEST_CASE("stabilized one-step and tmle coincide for quadratic loss, linear functional") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    AipwFixture fx = make_aipw_fixture(seed + 70);
    fx.func = FunctionalSpec{};  // mean of theta
    for (auto& a : fx.fits.alpha) a = combine(constant_function(1.0), 0.3, a);
    EstimateReport stab = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, true);
    EstimateReport tm = tmle_estimate(fx.data, fx.plan, fx.func, fx.fits);
    REQUIRE(stab.warnings.empty());
    CHECK(std::abs(stab.psi_hat - tm.psi_hat) < 1e-10);
  }
}

TEST_CASE("tmle targets the beta-geometric likelihood through bisection") {
  Dataset d = testutil::probe_bg_data(80, 301);
  CrossFitPlan plan = make_folds(80, 2, 7);
  LossSpec loss;
  loss.kind = LossKind::beta_geometric_nll;
  loss.d1 = 2;
  FunctionalSpec func;
  func.kind = FunctionalSpec::Kind::bg_survival;
  func.t0 = 4;

  FoldFits fits;
  fits.eta.resize(2);
  fits.riesz_lambda.assign(2, 0.0);
  FitConfig fcfg;
  for (int j = 0; j < 2; ++j) {
    auto train = plan.complement(j);
    FittedFunction th = fit_erm(loss, constant_space(2), d, train, fcfg);
    SieveConfig cfg;
    cfg.columns = {"x"};
    cfg.ranges = {{-1.0, 1.0}};
    cfg.binary = {false};
    cfg.d1 = 2;
    FittedFunction al = fit_riesz(LossBinding::shared(loss), FunctionBinding::shared(th), func,
                                  sieve_space(cfg, 1), d, train, 0.0);
    fits.loss_by_fold.push_back(loss);
    fits.theta.push_back(th);
    fits.alpha.push_back(al);
  }

  EstimateReport rep = tmle_estimate(d, plan, func, fits);
  REQUIRE(rep.epsilon.has_value());
  double eps = *rep.epsilon;
  double score = 0.0;
  double n = static_cast<double>(d.n_rows());
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z{&d, i};
    int j = plan.assignment[i];
    FittedFunction tstar = combine(fits.theta[j], eps, fits.alpha[j]);
    Eigen::VectorXd g = loss_gradient(loss, tstar, z);
    score += g.dot(evaluate(fits.alpha[j], z)) / n;
  }
  CHECK(std::abs(score) < 1e-8);
  CHECK(std::abs(rep.influence.mean()) < 1e-10);
  CHECK(rep.psi_hat > 0.0);
  CHECK(rep.psi_hat < 1.0);
}

TEST_CASE("fluctuation solving: zero direction and unbracketable scores") {
  // All events at t=1 give a strictly negative score in the a-direction
  // however far the fluctuation travels, so no root is bracketed.
  const std::size_t n = 10;
  Eigen::MatrixXd v(n, 4);
  for (std::size_t i = 0; i < n; ++i) v.row(i) << 0.1 * i, 1.0, 1.0, 1.0;
  Roles roles;
  roles.covariates = {"x"};
  roles.treatment = "a";
  roles.time = "t";
  roles.event = "d";
  Dataset d({"x", "a", "t", "d"}, v, roles);
  CrossFitPlan plan = make_folds(n, 2, 3);

  LossSpec loss;
  loss.kind = LossKind::beta_geometric_nll;
  loss.d1 = 2;
  // theta = (2, -2), direction (1, 0): the score is -sigma(-4 - eps) summed
  // over the rows, strictly negative on [-10, 10] and comfortably above the
  // solver's zero tolerance in magnitude, so no root can be bracketed.
  Eigen::VectorXd ta(1), tb(1), aa(1), ab(1);
  ta << 2.0;
  tb << -2.0;
  aa << 1.0;
  ab << 0.0;
  FoldFits fits;
  fits.eta.resize(2);
  fits.riesz_lambda.assign(2, 0.0);
  for (int j = 0; j < 2; ++j) {
    fits.loss_by_fold.push_back(loss);
    fits.theta.push_back(make_fitted(constant_space(2), {ta, tb}));
    fits.alpha.push_back(make_fitted(constant_space(2), {aa, ab}));
  }
  EvalPlan ep = eval_all(plan);
  CHECK_THROWS_AS((void)solve_fluctuation(d, ep.rows, ep.fold, fits), NoBracket);

  for (auto& a : fits.alpha) a = zero_function(2);
  CHECK(solve_fluctuation(d, ep.rows, ep.fold, fits) == 0.0);
}

TEST_CASE("evaluation plans: default pairing and split-mode dealing") {
  CrossFitPlan plan = make_folds(9, 3, 5);
  EvalPlan def = eval_all(plan);
  REQUIRE(def.rows.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(def.rows[i] == i);
    CHECK(def.fold[i] == plan.assignment[i]);
  }
  EvalPlan split = eval_split({10, 11, 12, 13, 14}, 2);
  REQUIRE(split.rows.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(split.rows[k] == 10 + k);
    CHECK(split.fold[k] == static_cast<int>(k % 2));
  }
}

TEST_CASE("split evaluation averages over the held-out rows only") {
  AipwFixture fx = make_aipw_fixture(12);
  const std::size_t n = fx.data.n_rows();
  std::vector<std::size_t> held;
  for (std::size_t i = n / 2; i < n; ++i) held.push_back(i);
  EvalPlan ep = eval_split(held, fx.plan.J);
  EstimateReport rep = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, false, 0.95, &ep);
  CHECK(rep.n == held.size());

  int a = fx.data.col_index("a"), yc = fx.data.col_index("y");
  double m_sum = 0.0, corr_sum = 0.0;
  for (std::size_t k = 0; k < held.size(); ++k) {
    Obs z{&fx.data, held[k]};
    int j = ep.fold[k];
    m_sum += evaluate1(fx.fits.theta[j], z.with(a, 1.0)) -
             evaluate1(fx.fits.theta[j], z.with(a, 0.0));
    corr_sum +=
        (evaluate1(fx.fits.theta[j], z) - z.value(yc)) * evaluate1(fx.fits.alpha[j], z);
  }
  double m = static_cast<double>(held.size());
  CHECK(rep.psi_hat == doctest::Approx(m_sum / m - corr_sum / m).epsilon(1e-12));
}

TEST_CASE("an identically-zero influence is flagged, not crashed on") {
  Dataset d = testutil::probe_xy_data(20, 13, false);
  CrossFitPlan plan = make_folds(20, 2, 1);
  FoldFits fits;
  fits.eta.resize(2);
  fits.riesz_lambda.assign(2, 0.0);
  for (int j = 0; j < 2; ++j) {
    fits.loss_by_fold.push_back(LossSpec{});
    fits.theta.push_back(constant_function(3.0));
    fits.alpha.push_back(zero_function(1));
  }
  FunctionalSpec func;  // mean of theta: every influence value is zero
  EstimateReport rep = one_step_estimate(d, plan, func, fits, false);
  CHECK(rep.psi_hat == doctest::Approx(3.0));
  CHECK(rep.se == 0.0);
  CHECK(rep.ci.lo == rep.ci.hi);
  bool flagged = false;
  for (const auto& w : rep.warnings) flagged |= w.find("DegenerateVariance") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("normal quantile inverts the cdf to high precision") {
  CHECK(std::abs(normal_quantile(0.5)) < 1e-15);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
  Rng rng(55);
  for (int i = 0; i < 40; ++i) {
    double p = rng.uniform(1e-8, 1.0 - 1e-8);
    double q = normal_quantile(p);
    CHECK(std::abs(normal_cdf(q) - p) < 1e-12);
    CHECK(normal_quantile(1.0 - p) == doctest::Approx(-q).epsilon(1e-9).scale(1.0));
  }
  CHECK_THROWS_AS((void)normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS((void)normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS((void)normal_quantile(-0.2), DomainError);
}

TEST_CASE("estimate reports serialize with their diagnostics") {
  AipwFixture fx = make_aipw_fixture(21);
  EstimateReport rep = one_step_estimate(fx.data, fx.plan, fx.func, fx.fits, true);
  rep.config_json = "{\"folds\": 3}";
  nlohmann::json doc = nlohmann::json::parse(report_to_json(rep));
  CHECK(doc.at("estimator").get<std::string>() == rep.estimator);
  CHECK(doc.at("psi_hat").get<double>() == doctest::Approx(rep.psi_hat));
  CHECK(doc.at("se").get<double>() == doctest::Approx(rep.se));
  CHECK(doc.at("ci").at("lo").get<double>() == doctest::Approx(rep.ci.lo));
  CHECK(doc.at("ci").at("hi").get<double>() == doctest::Approx(rep.ci.hi));
  CHECK(doc.at("n").get<std::size_t>() == rep.n);
  CHECK(doc.at("influence").size() == rep.n);
  CHECK(doc.at("diagnostics").contains("plug_in"));
  CHECK(doc.at("diagnostics").contains("epsilon"));
  CHECK(doc.at("config").at("folds").get<int>() == 3);
}
