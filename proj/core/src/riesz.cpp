#include "autodml/riesz.hpp"

#include <cmath>
#include <limits>

#include "linalg.hpp"

namespace autodml {

namespace {

// m x d1 values of a by-fold function over the rows, grouped by fold so each
// design matrix is built once.
Eigen::MatrixXd values_by_fold(const FunctionBinding& f, const Dataset& data,
                               const std::vector<std::size_t>& rows) {
  if (f.shared_only()) return evaluate_rows(f.front(), data, rows);
  Eigen::MatrixXd out(rows.size(), f.front().dim);
  std::vector<std::vector<std::size_t>> pos(f.per_fold.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    pos[f.plan->assignment[rows[i]]].push_back(i);
  for (std::size_t j = 0; j < pos.size(); ++j) {
    if (pos[j].empty()) continue;
    std::vector<std::size_t> sub;
    sub.reserve(pos[j].size());
    for (std::size_t i : pos[j]) sub.push_back(rows[i]);
    Eigen::MatrixXd vals = evaluate_rows(f.per_fold[j], data, sub);
    for (std::size_t i = 0; i < pos[j].size(); ++i) out.row(pos[j][i]) = vals.row(i);
  }
  return out;
}

int treatment_col(const Dataset& data) {
  return data.require_col(data.roles().treatment);
}

}  // namespace

RieszSystem assemble_riesz_system(const LossBinding& loss, const FunctionBinding& theta,
                                  const FunctionalSpec& func, SpacePtr space,
                                  const Dataset& data, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DomainError("assemble_riesz_system over an empty row set");
  const FunctionSpace& s = *space;
  const int d1 = s.d1();
  if (loss.front().d1 != d1) {
    throw DimensionMismatch("representer space has d1=" + std::to_string(d1) +
                            " but loss expects d1=" + std::to_string(loss.front().d1));
  }
  const std::size_t m = rows.size();
  const double inv_m = 1.0 / static_cast<double>(m);

  std::vector<Eigen::MatrixXd> B(d1);
  std::vector<int> offset(d1);
  int p = 0;
  for (int b = 0; b < d1; ++b) {
    offset[b] = p;
    p += s.block_dim(b);
    B[b] = design_matrix(s, b, data, rows);
  }

  std::vector<LossCtx> ctx = make_loss_ctxs(loss, data, rows);
  Eigen::MatrixXd u = values_by_fold(theta, data, rows);

  RieszSystem sys;
  sys.p = p;
  sys.n_rows = m;
  sys.A.setZero(p, p);
  sys.b.setZero(p);

  if (d1 == 1) {
    Eigen::VectorXd h(m), ui(1);
    for (std::size_t i = 0; i < m; ++i) {
      ui[0] = u(i, 0);
      h[i] = loss_point_hessian(loss.at_row(rows[i]), ctx[i], ui)(0, 0);
    }
    sys.A = B[0].transpose() * (h.asDiagonal() * B[0]) * inv_m;
  } else {
    Eigen::VectorXd ui(d1);
    for (std::size_t i = 0; i < m; ++i) {
      ui = u.row(i).transpose();
      Eigen::MatrixXd hi = loss_point_hessian(loss.at_row(rows[i]), ctx[i], ui);
      for (int b1 = 0; b1 < d1; ++b1) {
        auto r1 = B[b1].row(i);
        for (int b2 = 0; b2 < d1; ++b2) {
          auto r2 = B[b2].row(i);
          sys.A.block(offset[b1], offset[b2], r1.size(), r2.size()) +=
              (hi(b1, b2) * inv_m) * (r1.transpose() * r2);
        }
      }
    }
  }

  if (func.kind == FunctionalSpec::Kind::ate_contrast &&
      is_contrast(func, theta.front(), data)) {
    if (d1 != 1) throw DimensionMismatch("ate_contrast expects a scalar space");
    int a = treatment_col(data);
    Eigen::MatrixXd D1 = design_matrix(s, 0, data, rows, a, 1.0);
    Eigen::MatrixXd D0 = design_matrix(s, 0, data, rows, a, 0.0);
    sys.b = (D1 - D0).colwise().sum().transpose() * inv_m;
  } else {
    Obs z{&data, 0};
    for (std::size_t i = 0; i < m; ++i) {
      z.row = rows[i];
      Eigen::VectorXd v = functional_weight(func, theta.at_row(rows[i]), z, d1);
      for (int b = 0; b < d1; ++b)
        sys.b.segment(offset[b], B[b].cols()) += (v[b] * inv_m) * B[b].row(i).transpose();
    }
  }
  return sys;
}

FittedFunction fit_riesz(const RieszSystem& sys, SpacePtr space, double lambda) {
  Eigen::MatrixXd A = sys.A;
  if (lambda > 0.0) A.diagonal().array() += lambda;
  Eigen::VectorXd c = detail::solve_spd(A, sys.b);
  std::vector<Eigen::VectorXd> coeffs;
  int off = 0;
  for (int b = 0; b < space->d1(); ++b) {
    coeffs.push_back(c.segment(off, space->block_dim(b)));
    off += space->block_dim(b);
  }
  return make_fitted(std::move(space), std::move(coeffs));
}

FittedFunction fit_riesz(const LossBinding& loss, const FunctionBinding& theta,
                         const FunctionalSpec& func, SpacePtr space, const Dataset& data,
                         const std::vector<std::size_t>& rows, double lambda) {
  RieszSystem sys = assemble_riesz_system(loss, theta, func, space, data, rows);
  return fit_riesz(sys, std::move(space), lambda);
}

double riesz_risk(const LossBinding& loss, const FunctionBinding& theta,
                  const FunctionalSpec& func, const FittedFunction& alpha,
                  const Dataset& data, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw DomainError("riesz_risk over an empty row set");
  const std::size_t m = rows.size();
  const int d1 = alpha.dim;
  Eigen::MatrixXd av = evaluate_rows(alpha, data, rows);
  Eigen::MatrixXd u = values_by_fold(theta, data, rows);
  std::vector<LossCtx> ctx = make_loss_ctxs(loss, data, rows);

  double quad = 0.0;
  Eigen::VectorXd ui(d1);
  for (std::size_t i = 0; i < m; ++i) {
    ui = u.row(i).transpose();
    Eigen::MatrixXd hi = loss_point_hessian(loss.at_row(rows[i]), ctx[i], ui);
    quad += 0.5 * (av.row(i) * hi * av.row(i).transpose()).value();
  }

  double lin = 0.0;
  if (func.kind == FunctionalSpec::Kind::ate_contrast && is_contrast(func, theta.front(), data)) {
    int a = treatment_col(data);
    lin = (evaluate_rows(alpha, data, rows, a, 1.0) - evaluate_rows(alpha, data, rows, a, 0.0))
              .col(0)
              .sum();
  } else {
    Obs z{&data, 0};
    for (std::size_t i = 0; i < m; ++i) {
      z.row = rows[i];
      lin += functional_weight(func, theta.at_row(rows[i]), z, d1).dot(av.row(i).transpose());
    }
  }
  return (quad - lin) / static_cast<double>(m);
}

const std::vector<double>& default_riesz_lambdas() {
  static const std::vector<double> grid{0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  return grid;
}

double select_riesz_lambda(const LossBinding& loss, const FunctionBinding& theta,
                           const FunctionalSpec& func, SpacePtr space, const Dataset& data,
                           const std::vector<std::size_t>& rows, std::uint64_t seed,
                           const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("empty lambda grid");
  if (rows.size() < 4) throw DomainError("select_riesz_lambda needs at least 4 rows");
  const int J = static_cast<int>(std::min<std::size_t>(5, rows.size() / 2));
  CrossFitPlan inner = make_folds(rows.size(), J, seed);

  // Both the training normal equations and the validation risk are quadratic
  // forms in the coefficients, so each inner fold is assembled once and the
  // grid is swept with solves only.
  std::vector<double> risk(grid.size(), 0.0);
  std::vector<char> ok(grid.size(), 1);
  for (int j = 0; j < J; ++j) {
    std::vector<std::size_t> train, valid;
    for (std::size_t i = 0; i < rows.size(); ++i)
      (inner.assignment[i] == j ? valid : train).push_back(rows[i]);
    RieszSystem tr = assemble_riesz_system(loss, theta, func, space, data, train);
    RieszSystem va = assemble_riesz_system(loss, theta, func, space, data, valid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!ok[g]) continue;
      try {
        Eigen::MatrixXd A = tr.A;
        if (grid[g] > 0.0) A.diagonal().array() += grid[g];
        Eigen::VectorXd c = detail::solve_spd(A, tr.b);
        risk[g] += 0.5 * c.dot(va.A * c) - va.b.dot(c);
      } catch (const Error&) {
        ok[g] = 0;
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  double chosen = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!ok[g]) continue;
    if (risk[g] <= best) {  // <= so ties promote the larger lambda
      best = risk[g];
      chosen = grid[g];
    }
  }
  if (std::isnan(chosen)) {
    throw Degenerate("no lambda on the grid survived inner cross-validation");
  }
  return chosen;
}

}  // namespace autodml
