#include "autodml/fit.hpp"

#include <cmath>
#include <limits>

#include "linalg.hpp"

namespace autodml {

namespace {

struct Workspace {
  SpacePtr space;
  std::vector<Eigen::MatrixXd> design;  // per block, m x p_b
  std::vector<LossCtx> ctx;             // per row
  std::vector<const LossSpec*> spec;    // per row
  std::vector<int> offset;              // block start within the stacked vector
  int d1 = 0, p = 0;
  std::size_t m = 0;

  Eigen::MatrixXd values(const Eigen::VectorXd& c) const {  // m x d1
    Eigen::MatrixXd u(m, d1);
    for (int b = 0; b < d1; ++b) u.col(b) = design[b] * c.segment(offset[b], design[b].cols());
    return u;
  }
};

Workspace make_workspace(const LossBinding& loss, SpacePtr space, const Dataset& data,
                         const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DomainError("fit_erm over an empty row set");
  Workspace w;
  w.space = std::move(space);
  w.d1 = w.space->d1();
  w.m = rows.size();
  if (loss.front().d1 != w.d1) {
    throw DimensionMismatch("space has d1=" + std::to_string(w.d1) + " but loss expects d1=" +
                            std::to_string(loss.front().d1));
  }
  w.offset.resize(w.d1);
  for (int b = 0; b < w.d1; ++b) {
    w.offset[b] = w.p;
    w.p += w.space->block_dim(b);
    w.design.push_back(design_matrix(*w.space, b, data, rows));
  }
  w.ctx = make_loss_ctxs(loss, data, rows);
  w.spec.reserve(w.m);
  for (std::size_t r : rows) w.spec.push_back(&loss.at_row(r));
  return w;
}

// Penalized empirical risk at the stacked coefficient vector; +inf when a
// pointwise evaluation leaves the loss's numeric domain, so the line search
// backs off instead of propagating the failure.
double risk_at(const Workspace& w, const Eigen::VectorXd& c, double lambda) {
  Eigen::MatrixXd u = w.values(c);
  double total = 0.0;
  Eigen::VectorXd ui(w.d1);
  for (std::size_t i = 0; i < w.m; ++i) {
    ui = u.row(i).transpose();
    try {
      total += loss_point_value(*w.spec[i], w.ctx[i], ui);
    } catch (const NumericRange&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  total /= static_cast<double>(w.m);
  if (lambda > 0.0) total += 0.5 * lambda * c.squaredNorm();
  return total;
}

void grad_hess_at(const Workspace& w, const Eigen::VectorXd& c, double lambda,
                  Eigen::VectorXd& G, Eigen::MatrixXd& H) {
  const double inv_m = 1.0 / static_cast<double>(w.m);
  G.setZero(w.p);
  H.setZero(w.p, w.p);
  Eigen::MatrixXd u = w.values(c);
  if (w.d1 == 1) {
    // Scalar-output fast path: one weighted cross product per pass.
    Eigen::VectorXd g(w.m), h(w.m), ui(1);
    for (std::size_t i = 0; i < w.m; ++i) {
      ui[0] = u(i, 0);
      g[i] = loss_point_gradient(*w.spec[i], w.ctx[i], ui)[0];
      h[i] = loss_point_hessian(*w.spec[i], w.ctx[i], ui)(0, 0);
    }
    const Eigen::MatrixXd& B = w.design[0];
    G = B.transpose() * g * inv_m;
    H = B.transpose() * (h.asDiagonal() * B) * inv_m;
  } else {
    Eigen::VectorXd ui(w.d1);
    for (std::size_t i = 0; i < w.m; ++i) {
      ui = u.row(i).transpose();
      Eigen::VectorXd gi = loss_point_gradient(*w.spec[i], w.ctx[i], ui);
      Eigen::MatrixXd hi = loss_point_hessian(*w.spec[i], w.ctx[i], ui);
      for (int b1 = 0; b1 < w.d1; ++b1) {
        auto r1 = w.design[b1].row(i);
        G.segment(w.offset[b1], r1.size()) += (gi[b1] * inv_m) * r1.transpose();
        for (int b2 = 0; b2 < w.d1; ++b2) {
          auto r2 = w.design[b2].row(i);
          H.block(w.offset[b1], w.offset[b2], r1.size(), r2.size()) +=
              (hi(b1, b2) * inv_m) * (r1.transpose() * r2);
        }
      }
    }
  }
  if (lambda > 0.0) {
    G += lambda * c;
    H.diagonal().array() += lambda;
  }
}

}  // namespace

FittedFunction fit_erm(const LossBinding& loss, SpacePtr space, const Dataset& data,
                       const std::vector<std::size_t>& rows, const FitConfig& cfg) {
  Workspace w = make_workspace(loss, std::move(space), data, rows);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(w.p);
  Eigen::VectorXd G;
  Eigen::MatrixXd H;
  double gnorm = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.newton.max_iters; ++iter) {
    grad_hess_at(w, c, cfg.lambda, G, H);
    if (!G.allFinite() || !H.allFinite()) {
      throw NumericRange("empirical-risk derivatives are not finite");
    }
    gnorm = G.lpNorm<Eigen::Infinity>();
    if (gnorm < cfg.newton.grad_tol) break;

    // Damped Newton step: when the raw direction fails to descend (the
    // empirical Hessian need not be definite away from the optimum), redo the
    // solve with H + mu I for growing mu, sliding toward gradient descent.
    const double r0 = risk_at(w, c, cfg.lambda);
    // Roundoff cushion for the sufficient-decrease test: in Newton's local
    // phase the predicted decrease falls below the rounding error of the risk
    // itself, and an exact Armijo comparison would reject the very steps that
    // drive the gradient under its tolerance.
    const double ftol =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r0));
    const double hscale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    double mu = 0.0;
    bool moved = false;
    for (int attempt = 0; attempt < 10 && !moved; ++attempt) {
      Eigen::VectorXd step;
      bool solved = true;
      try {
        if (mu == 0.0) {
          step = detail::solve_spd(H, -G);
        } else {
          Eigen::MatrixXd damped = H;
          damped.diagonal().array() += mu;
          step = detail::solve_spd(damped, -G);
        }
      } catch (const SingularSystem&) {
        solved = false;
      }
      if (solved) {
        const double slope = step.dot(G);
        if (slope < 0.0) {
          double t = 1.0;
          for (int back = 0; back <= cfg.newton.max_backtracks; ++back) {
            if (risk_at(w, c + t * step, cfg.lambda) <= r0 + 1e-4 * t * slope + ftol) {
              c += t * step;
              moved = true;
              break;
            }
            t *= 0.5;
          }
        }
      }
      mu = (mu == 0.0) ? 1e-8 * hscale : 100.0 * mu;
    }
    if (!moved) break;  // no descent at any damping; the final gradient check decides
  }

  grad_hess_at(w, c, cfg.lambda, G, H);
  gnorm = G.lpNorm<Eigen::Infinity>();
  if (!(gnorm < cfg.newton.grad_tol)) {
    throw NewtonDivergence("Newton stopped with gradient norm " + std::to_string(gnorm) +
                           " above tolerance " + std::to_string(cfg.newton.grad_tol));
  }

  std::vector<Eigen::VectorXd> coeffs;
  for (int b = 0; b < w.d1; ++b) coeffs.push_back(c.segment(w.offset[b], w.space->block_dim(b)));
  FittedFunction f = make_fitted(w.space, std::move(coeffs));
  f.grad_norm = gnorm;
  return f;
}

FittedFunction fit_erm(const LossSpec& loss, SpacePtr space, const Dataset& data,
                       const std::vector<std::size_t>& rows, const FitConfig& cfg) {
  return fit_erm(LossBinding::shared(loss), std::move(space), data, rows, cfg);
}

int select_sieve_step(const std::vector<double>& risk, const std::vector<char>& eligible) {
  int best = 0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (!eligible[i]) continue;
    if (best == 0 || risk[i] < risk[best - 1]) best = static_cast<int>(i) + 1;
  }
  if (best == 0) throw Degenerate("no eligible sieve step in cross-validation");
  return best;
}

CvResult cross_validate(const LossBinding& loss, const SieveConfig& sieve, int k_max,
                        const Dataset& data, const CrossFitPlan& plan, const FitConfig& cfg) {
  if (k_max < 1) throw DomainError("cross_validate needs k_max >= 1");
  CvResult out;
  out.risk.assign(k_max, std::numeric_limits<double>::quiet_NaN());
  out.eligible.assign(k_max, 0);
  const double n = static_cast<double>(plan.n());

  for (int k = 1; k <= k_max; ++k) {
    double held_out = 0.0;
    bool ok = true;
    for (int j = 0; j < plan.J && ok; ++j) {
      try {
        FittedFunction f = fit_erm(loss, sieve_space(sieve, k), data, plan.complement(j), cfg);
        held_out += empirical_risk(loss, FunctionBinding::shared(f), data, plan.folds[j]) *
                    static_cast<double>(plan.folds[j].size());
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) {
      out.risk[k - 1] = held_out / n;
      out.eligible[k - 1] = 1;
    }
  }
  out.k = select_sieve_step(out.risk, out.eligible);
  return out;
}

}  // namespace autodml
