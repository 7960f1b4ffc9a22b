#include "autodml/loss.hpp"

#include <cmath>

#include "autodml/bg.hpp"

namespace autodml {

namespace {

constexpr double kMuClamp = 1e-6;

double clamp_unit(double v) {
  if (v < kMuClamp) return kMuClamp;
  if (v > 1.0 - kMuClamp) return 1.0 - kMuClamp;
  return v;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double expit(double q) { return q >= 0.0 ? 1.0 / (1.0 + std::exp(-q)) : std::exp(q) / (1.0 + std::exp(q)); }

// log(1 + e^q) without overflow.
double softplus(double q) { return q > 0.0 ? q + std::log1p(std::exp(-q)) : std::log1p(std::exp(q)); }

const FittedFunction& nuisance(const LossSpec& loss, const char* name) {
  auto it = loss.nuisances.find(name);
  if (it == loss.nuisances.end()) {
    throw MissingNuisance(std::string("loss requires nuisance '") + name + "', which is not bound");
  }
  return it->second;
}

double role_value(const Obs& z, const std::string& role, const char* what) {
  if (role.empty()) throw MissingColumn(std::string("loss requires the ") + what + " role");
  return z.value(z.data->require_col(role));
}

double target_value(const LossSpec& loss, const Obs& z) {
  if (!loss.target.empty()) return z.value(z.data->require_col(loss.target));
  return role_value(z, z.data->roles().outcome, "outcome");
}

void check_dim(const LossSpec& loss, const Eigen::VectorXd& u) {
  if (u.size() != loss.d1) {
    throw DimensionMismatch("theta value has dimension " + std::to_string(u.size()) +
                            "; loss expects " + std::to_string(loss.d1));
  }
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " evaluated to a non-finite value");
}

}  // namespace

LossCtx make_loss_ctx(const LossSpec& loss, const Obs& z) {
  LossCtx c;
  switch (loss.kind) {
    case LossKind::squared_error:
      c.y = target_value(loss, z);
      break;
    case LossKind::pseudo_outcome:
      c.w = evaluate1(nuisance(loss, "weight"), z);
      c.zeta = evaluate1(nuisance(loss, "pseudo"), z);
      check_finite(c.w, "pseudo-outcome weight");
      check_finite(c.zeta, "pseudo-outcome");
      break;
    case LossKind::rlearner:
      c.y = role_value(z, z.data->roles().outcome, "outcome");
      c.a = role_value(z, z.data->roles().treatment, "treatment");
      c.pi = evaluate1(nuisance(loss, "propensity"), z);
      check_finite(c.pi, "propensity");
      if (loss.nuisances.count("baseline")) {
        c.m0 = evaluate1(nuisance(loss, "baseline"), z);
      } else {
        // m0 = E[y|x] assembled from its identity pi mu1 + (1-pi) mu0. Tying
        // the baseline error to the propensity error this way keeps the
        // residual regression target at the true contrast even when the
        // propensity model is rough.
        double mu1 = evaluate1(nuisance(loss, "mu1"), z);
        double mu0 = evaluate1(nuisance(loss, "mu0"), z);
        check_finite(mu1, "mu1");
        check_finite(mu0, "mu0");
        c.m0 = c.pi * mu1 + (1.0 - c.pi) * mu0;
      }
      check_finite(c.m0, "marginal outcome");
      break;
    case LossKind::drlearner: {
      c.y = role_value(z, z.data->roles().outcome, "outcome");
      c.a = role_value(z, z.data->roles().treatment, "treatment");
      double pi = clamp_unit(evaluate1(nuisance(loss, "propensity"), z));
      double mu1 = evaluate1(nuisance(loss, "mu1"), z);
      double mu0 = evaluate1(nuisance(loss, "mu0"), z);
      check_finite(pi, "propensity");
      check_finite(mu1, "mu1");
      check_finite(mu0, "mu0");
      double mua = c.a == 1.0 ? mu1 : mu0;
      c.w = 1.0;
      c.zeta = mu1 - mu0 + (c.a - pi) / (pi * (1.0 - pi)) * (c.y - mua);
      break;
    }
    case LossKind::ortho_logistic: {
      c.y = role_value(z, z.data->roles().outcome, "outcome");
      c.a = role_value(z, z.data->roles().treatment, "treatment");
      c.pi = evaluate1(nuisance(loss, "propensity"), z);
      check_finite(c.pi, "propensity");
      double mu1 = clamp_unit(evaluate1(nuisance(loss, "mu1"), z));
      double mu0 = clamp_unit(evaluate1(nuisance(loss, "mu0"), z));
      double mua = c.a == 1.0 ? mu1 : mu0;
      c.h0 = c.pi * logit(mu1) + (1.0 - c.pi) * logit(mu0);
      c.nu = mua * (1.0 - mua);
      break;
    }
    case LossKind::beta_geometric_nll: {
      double t = role_value(z, z.data->roles().time, "time");
      c.t = static_cast<int>(t);
      c.event1 = role_value(z, z.data->roles().event, "event");
      break;
    }
    case LossKind::riesz_quadratic: {
      if (!loss.base || !loss.theta_bar || !loss.functional) {
        throw MissingNuisance("riesz_quadratic needs base loss, theta_bar and functional");
      }
      Eigen::VectorXd ubar = evaluate(*loss.theta_bar, z);
      LossCtx base_ctx = make_loss_ctx(*loss.base, z);
      c.Hq = loss_point_hessian(*loss.base, base_ctx, ubar);
      c.vq = functional_weight(*loss.functional, *loss.theta_bar, z, loss.d1);
      break;
    }
  }
  return c;
}

double loss_point_value(const LossSpec& loss, const LossCtx& c, const Eigen::VectorXd& u) {
  check_dim(loss, u);
  switch (loss.kind) {
    case LossKind::squared_error: {
      double r = u[0] - c.y;
      return 0.5 * r * r;
    }
    case LossKind::pseudo_outcome:
    case LossKind::drlearner: {
      double r = c.zeta - u[0];
      return 0.5 * c.w * r * r;
    }
    case LossKind::rlearner: {
      double r = (c.y - c.m0) - (c.a - c.pi) * u[0];
      return 0.5 * r * r;
    }
    case LossKind::ortho_logistic: {
      double q = (c.a - c.pi) * u[0] + c.h0;
      return (softplus(q) - c.y * q) / c.nu;
    }
    case LossKind::beta_geometric_nll: {
      BgDerivs d = bg_log_derivatives(u[0], u[1], c.t);
      return -c.event1 * d.log_p_eq - (1.0 - c.event1) * d.log_p_gt;
    }
    case LossKind::riesz_quadratic:
      return 0.5 * u.dot(c.Hq * u) - c.vq.dot(u);
  }
  throw DomainError("unknown loss kind");
}

Eigen::VectorXd loss_point_gradient(const LossSpec& loss, const LossCtx& c,
                                    const Eigen::VectorXd& u) {
  check_dim(loss, u);
  Eigen::VectorXd g(loss.d1);
  switch (loss.kind) {
    case LossKind::squared_error:
      g[0] = u[0] - c.y;
      return g;
    case LossKind::pseudo_outcome:
    case LossKind::drlearner:
      g[0] = c.w * (u[0] - c.zeta);
      return g;
    case LossKind::rlearner:
      g[0] = -(c.a - c.pi) * ((c.y - c.m0) - (c.a - c.pi) * u[0]);
      return g;
    case LossKind::ortho_logistic: {
      double q = (c.a - c.pi) * u[0] + c.h0;
      g[0] = (c.a - c.pi) * (expit(q) - c.y) / c.nu;
      return g;
    }
    case LossKind::beta_geometric_nll: {
      BgDerivs d = bg_log_derivatives(u[0], u[1], c.t);
      return -c.event1 * d.g_eq - (1.0 - c.event1) * d.g_gt;
    }
    case LossKind::riesz_quadratic:
      return c.Hq * u - c.vq;
  }
  throw DomainError("unknown loss kind");
}

Eigen::MatrixXd loss_point_hessian(const LossSpec& loss, const LossCtx& c,
                                   const Eigen::VectorXd& u) {
  check_dim(loss, u);
  Eigen::MatrixXd h(loss.d1, loss.d1);
  switch (loss.kind) {
    case LossKind::squared_error:
      h(0, 0) = 1.0;
      return h;
    case LossKind::pseudo_outcome:
    case LossKind::drlearner:
      h(0, 0) = c.w;
      return h;
    case LossKind::rlearner:
      h(0, 0) = (c.a - c.pi) * (c.a - c.pi);
      return h;
    case LossKind::ortho_logistic: {
      double q = (c.a - c.pi) * u[0] + c.h0;
      double p = expit(q);
      h(0, 0) = (c.a - c.pi) * (c.a - c.pi) * p * (1.0 - p) / c.nu;
      return h;
    }
    case LossKind::beta_geometric_nll: {
      BgDerivs d = bg_log_derivatives(u[0], u[1], c.t);
      return -c.event1 * d.h_eq - (1.0 - c.event1) * d.h_gt;
    }
    case LossKind::riesz_quadratic:
      return c.Hq;
  }
  throw DomainError("unknown loss kind");
}

double loss_value(const LossSpec& loss, const FittedFunction& theta, const Obs& z) {
  return loss_point_value(loss, make_loss_ctx(loss, z), evaluate(theta, z));
}

Eigen::VectorXd loss_gradient(const LossSpec& loss, const FittedFunction& theta, const Obs& z) {
  return loss_point_gradient(loss, make_loss_ctx(loss, z), evaluate(theta, z));
}

Eigen::MatrixXd loss_hessian(const LossSpec& loss, const FittedFunction& theta, const Obs& z) {
  return loss_point_hessian(loss, make_loss_ctx(loss, z), evaluate(theta, z));
}

std::vector<LossCtx> make_loss_ctxs(const LossBinding& loss, const Dataset& data,
                                    const std::vector<std::size_t>& rows) {
  std::vector<LossCtx> out;
  out.reserve(rows.size());
  Obs z{&data, 0};
  for (std::size_t r : rows) {
    z.row = r;
    out.push_back(make_loss_ctx(loss.at_row(r), z));
  }
  return out;
}

double empirical_risk(const LossBinding& loss, const FunctionBinding& theta,
                      const Dataset& data, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DomainError("empirical_risk over an empty row set");
  double total = 0.0;
  Obs z{&data, 0};
  for (std::size_t r : rows) {
    z.row = r;
    const LossSpec& spec = loss.at_row(r);
    total += loss_point_value(spec, make_loss_ctx(spec, z), evaluate(theta.at_row(r), z));
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace autodml
