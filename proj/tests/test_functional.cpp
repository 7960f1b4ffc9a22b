#include <memory>

#include "doctest.h"

#include "autodml/bg.hpp"
#include "autodml/functional.hpp"
#include "helpers.hpp"
#include "probes.hpp"

using namespace autodml;

namespace {

// Theta over (a, x) with an explicit treatment interaction: a * (1 + x) + 2x.
FittedFunction interacted_theta(const Dataset& d) {
  SieveConfig cfg;
  cfg.columns = {"x"};
  cfg.ranges = {{-1.0, 1.0}};
  cfg.binary = {false};
  FunctionSpace base = nested_sieve(cfg, 1);
  SpacePtr sat = treatment_saturated(base, "a");
  // Arm 1 block gets (1 + 3x), arm 0 block gets (0 + 2x): contrast 1 + x.
  Eigen::VectorXd c(4);
  c << 1.0, 3.0, 0.0, 2.0;
  (void)d;
  return make_fitted(sat, {c});
}

}  // namespace

TEST_CASE("mean-of-theta functional is evaluation, derivative is the direction") {
  Dataset d = testutil::make_xy_data(8, 21);
  FunctionalSpec m;  // mean_of_theta
  FittedFunction theta = testutil::linear_f(0.5, -1.0);
  FittedFunction h = testutil::linear_f(0.2, 0.3);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z = testutil::obs_at(d, i);
    CHECK(functional_value(m, theta, z) == doctest::Approx(evaluate1(theta, z)));
    CHECK(functional_derivative(m, theta, z, h) == doctest::Approx(evaluate1(h, z)));
    CHECK(functional_weight(m, theta, z, 1)(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("ate contrast differentiates theta through both arms") {
  Dataset d = testutil::make_xy_data(10, 22);
  FittedFunction theta = interacted_theta(d);
  FunctionalSpec m;
  m.kind = FunctionalSpec::Kind::ate_contrast;

  CHECK(is_contrast(m, theta, d));  // auto-detect: theta references the treatment
  int cx = d.col_index("x");
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z = testutil::obs_at(d, i);
    double x = z.value(cx);
    CHECK(functional_value(m, theta, z) == doctest::Approx(1.0 + x));
    // Derivative along another saturated function: its own contrast.
    CHECK(functional_derivative(m, theta, z, theta) == doctest::Approx(1.0 + x));
  }
  CHECK_THROWS_AS((void)functional_weight(m, theta, testutil::obs_at(d, 0), 1), DomainError);
}

TEST_CASE("ate contrast in identity mode treats theta as the effect itself") {
  Dataset d = testutil::make_xy_data(6, 23);
  FunctionalSpec m;
  m.kind = FunctionalSpec::Kind::ate_contrast;
  m.ate_mode = AteMode::identity;
  FittedFunction cate = testutil::linear_f(0.3, 0.5);
  CHECK_FALSE(is_contrast(m, cate, d));
  Obs z = testutil::obs_at(d, 2);
  CHECK(functional_value(m, cate, z) == doctest::Approx(evaluate1(cate, z)));
  CHECK(functional_weight(m, cate, z, 1)(0) == doctest::Approx(1.0));

  // auto_detect on a theta that never mentions the treatment: identity.
  FunctionalSpec auto_m;
  auto_m.kind = FunctionalSpec::Kind::ate_contrast;
  CHECK_FALSE(is_contrast(auto_m, cate, d));
  // And the explicit contrast override still differentiates through the arms
  // even for a degenerate theta (the double-robustness configuration).
  FunctionalSpec forced;
  forced.kind = FunctionalSpec::Kind::ate_contrast;
  forced.ate_mode = AteMode::contrast;
  CHECK(is_contrast(forced, zero_function(1), d));
  CHECK(functional_value(forced, zero_function(1), z) == doctest::Approx(0.0));
}

TEST_CASE("bg survival functional matches the recursion and its pathwise derivative") {
  Dataset d = testutil::probe_bg_data(8, 24);
  FunctionalSpec m;
  m.kind = FunctionalSpec::Kind::bg_survival;
  m.t0 = 5;

  // Constant theta (a, b) = (0.4, -0.2).
  Eigen::VectorXd ca(1), cb(1);
  ca << 0.4;
  cb << -0.2;
  FittedFunction theta = make_fitted(constant_space(2), {ca, cb});
  FittedFunction h = make_fitted(constant_space(2), {Eigen::VectorXd::Constant(1, 0.3),
                                                     Eigen::VectorXd::Constant(1, -0.1)});
  Obs z = testutil::obs_at(d, 1);
  double S = std::exp(bg_log_survival(0.4, -0.2, 5));
  CHECK(functional_value(m, theta, z) == doctest::Approx(S).epsilon(1e-14));

  // Central finite difference of eps -> m(theta + eps h).
  const double eps = 1e-6;
  double up = functional_value(m, combine(theta, eps, h), z);
  double dn = functional_value(m, combine(theta, -eps, h), z);
  double fd = (up - dn) / (2.0 * eps);
  CHECK(functional_derivative(m, theta, z, h) == doctest::Approx(fd).epsilon(1e-6));

  // The weight is S times the gradient of log S.
  BgDerivs bd = bg_log_derivatives(0.4, -0.2, 5);
  Eigen::VectorXd w = functional_weight(m, theta, z, 2);
  CHECK(w(0) == doctest::Approx(S * bd.g_gt(0)).epsilon(1e-12));
  CHECK(w(1) == doctest::Approx(S * bd.g_gt(1)).epsilon(1e-12));
}

TEST_CASE("linear custom functional is a weighted dot product") {
  Dataset d = testutil::make_xy_data(7, 25);
  FunctionalSpec m;
  m.kind = FunctionalSpec::Kind::linear_custom;
  m.weight = std::make_shared<const FittedFunction>(testutil::linear_f(1.0, -0.5));
  FittedFunction theta = testutil::linear_f(0.2, 0.8);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z = testutil::obs_at(d, i);
    double w = evaluate1(*m.weight, z);
    CHECK(functional_value(m, theta, z) == doctest::Approx(w * evaluate1(theta, z)));
    CHECK(functional_weight(m, theta, z, 1)(0) == doctest::Approx(w));
  }
}

TEST_CASE("functional design rows linearize over a basis") {
  Dataset d = testutil::make_xy_data(9, 26);
  SieveConfig cfg;
  cfg.columns = {"x"};
  cfg.ranges = {{-1.0, 1.0}};
  cfg.binary = {false};
  FunctionSpace base = nested_sieve(cfg, 2);
  SpacePtr sat = treatment_saturated(base, "a");

  FunctionalSpec contrast;
  contrast.kind = FunctionalSpec::Kind::ate_contrast;
  contrast.ate_mode = AteMode::contrast;
  FittedFunction theta = interacted_theta(d);
  int ca = d.col_index("a");
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    Obs z = testutil::obs_at(d, i);
    Eigen::VectorXd row = functional_design_row(contrast, theta, *sat, z);
    Eigen::VectorXd want =
        eval_block(*sat, 0, z.with(ca, 1.0)) - eval_block(*sat, 0, z.with(ca, 0.0));
    CHECK((row - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }

  FunctionalSpec mean;  // weight 1: the design row is the basis itself
  SpacePtr plain = make_space(base);
  Obs z = testutil::obs_at(d, 0);
  Eigen::VectorXd row = functional_design_row(mean, testutil::linear_f(0, 1), *plain, z);
  CHECK((row - eval_block(*plain, 0, z)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}
