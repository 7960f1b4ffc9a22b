#include "autodml/functional.hpp"

#include <cmath>

namespace autodml {

namespace {

int treatment_col(const Dataset& data) {
  if (data.roles().treatment.empty()) {
    throw MissingColumn("ate_contrast requires a treatment role on the dataset");
  }
  return data.require_col(data.roles().treatment);
}

void need_dim(const FittedFunction& theta, int want, const char* what) {
  if (theta.dim != want) {
    throw DimensionMismatch(std::string(what) + " expects theta with d1=" +
                            std::to_string(want) + "; got " + std::to_string(theta.dim));
  }
}

}  // namespace

bool is_contrast(const FunctionalSpec& m, const FittedFunction& theta, const Dataset& data) {
  if (m.kind != FunctionalSpec::Kind::ate_contrast) return false;
  switch (m.ate_mode) {
    case AteMode::contrast: return true;
    case AteMode::identity: return false;
    case AteMode::auto_detect:
      return !data.roles().treatment.empty() && references_column(theta, data.roles().treatment);
  }
  return false;
}

double functional_value(const FunctionalSpec& m, const FittedFunction& theta, const Obs& z) {
  switch (m.kind) {
    case FunctionalSpec::Kind::mean_of_theta:
      need_dim(theta, 1, "mean_of_theta");
      return evaluate(theta, z)[0];
    case FunctionalSpec::Kind::ate_contrast: {
      need_dim(theta, 1, "ate_contrast");
      if (!is_contrast(m, theta, *z.data)) return evaluate(theta, z)[0];
      int a = treatment_col(*z.data);
      return evaluate(theta, z.with(a, 1.0))[0] - evaluate(theta, z.with(a, 0.0))[0];
    }
    case FunctionalSpec::Kind::bg_survival: {
      need_dim(theta, 2, "bg_survival");
      Eigen::VectorXd u = evaluate(theta, z);
      return std::exp(bg_log_survival(u[0], u[1], m.t0));
    }
    case FunctionalSpec::Kind::linear_custom: {
      if (!m.weight) throw MissingNuisance("linear_custom functional has no weight function");
      if (m.weight->dim != theta.dim) {
        throw DimensionMismatch("linear_custom weight dimension does not match theta");
      }
      return evaluate(*m.weight, z).dot(evaluate(theta, z));
    }
  }
  throw DomainError("unknown functional kind");
}

Eigen::VectorXd functional_weight(const FunctionalSpec& m, const FittedFunction& theta,
                                  const Obs& z, int d1) {
  switch (m.kind) {
    case FunctionalSpec::Kind::mean_of_theta:
      return Eigen::VectorXd::Ones(1);
    case FunctionalSpec::Kind::ate_contrast:
      if (is_contrast(m, theta, *z.data)) {
        throw DomainError("counterfactual ate_contrast has no pointwise weight; "
                          "use functional_design_row");
      }
      return Eigen::VectorXd::Ones(1);
    case FunctionalSpec::Kind::bg_survival: {
      need_dim(theta, 2, "bg_survival");
      Eigen::VectorXd u = evaluate(theta, z);
      if (m.t0 == 0) return Eigen::VectorXd::Zero(2);
      BgDerivs d = bg_log_derivatives(u[0], u[1], m.t0);
      return std::exp(d.log_p_gt) * d.g_gt;
    }
    case FunctionalSpec::Kind::linear_custom: {
      if (!m.weight) throw MissingNuisance("linear_custom functional has no weight function");
      if (m.weight->dim != d1) {
        throw DimensionMismatch("linear_custom weight dimension does not match the space");
      }
      return evaluate(*m.weight, z);
    }
  }
  throw DomainError("unknown functional kind");
}

double functional_derivative(const FunctionalSpec& m, const FittedFunction& theta,
                             const Obs& z, const FittedFunction& h) {
  if (m.kind == FunctionalSpec::Kind::ate_contrast && is_contrast(m, theta, *z.data)) {
    need_dim(theta, 1, "ate_contrast");
    int a = treatment_col(*z.data);
    return evaluate(h, z.with(a, 1.0))[0] - evaluate(h, z.with(a, 0.0))[0];
  }
  return functional_weight(m, theta, z, h.dim).dot(evaluate(h, z));
}

Eigen::VectorXd functional_design_row(const FunctionalSpec& m, const FittedFunction& theta,
                                      const FunctionSpace& space, const Obs& z) {
  const int d1 = space.d1();
  Eigen::VectorXd row(space.total_dim());
  if (m.kind == FunctionalSpec::Kind::ate_contrast && is_contrast(m, theta, *z.data)) {
    if (d1 != 1) throw DimensionMismatch("ate_contrast expects a scalar space");
    int a = treatment_col(*z.data);
    row = eval_block(space, 0, z.with(a, 1.0)) - eval_block(space, 0, z.with(a, 0.0));
    return row;
  }
  Eigen::VectorXd v = functional_weight(m, theta, z, d1);
  int off = 0;
  for (int b = 0; b < d1; ++b) {
    int pb = space.block_dim(b);
    row.segment(off, pb) = v[b] * eval_block(space, b, z);
    off += pb;
  }
  return row;
}

}  // namespace autodml
