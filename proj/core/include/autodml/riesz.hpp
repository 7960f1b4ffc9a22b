#pragma once

#include <cstdint>
#include <vector>

#include "autodml/fit.hpp"

namespace autodml {

// Normal equations of the quadratic Riesz risk
//   R(alpha) = (1/n) sum { 1/2 alpha(z)' H(z) alpha(z) - dm(z, alpha) }
// on a basis: A_{jk} = (1/n) sum b_j(z)' H(z) b_k(z) over the block-diagonal
// embedding of basis functions, b_j = (1/n) sum dm(z, b_j).
struct RieszSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  int p = 0;
  std::size_t n_rows = 0;
};

RieszSystem assemble_riesz_system(const LossBinding& loss, const FunctionBinding& theta,
                                  const FunctionalSpec& func, SpacePtr space,
                                  const Dataset& data, const std::vector<std::size_t>& rows);

// Minimizer of the penalized Riesz risk: solves (A + lambda I) c = b.
FittedFunction fit_riesz(const RieszSystem& sys, SpacePtr space, double lambda);
FittedFunction fit_riesz(const LossBinding& loss, const FunctionBinding& theta,
                         const FunctionalSpec& func, SpacePtr space, const Dataset& data,
                         const std::vector<std::size_t>& rows, double lambda);

// Out-of-sample Riesz risk of a fitted representer (no penalty).
double riesz_risk(const LossBinding& loss, const FunctionBinding& theta,
                  const FunctionalSpec& func, const FittedFunction& alpha,
                  const Dataset& data, const std::vector<std::size_t>& rows);

// {0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}.
const std::vector<double>& default_riesz_lambdas();

// Inner cross-validation of the ridge level over the grid; ties go to the
// largest lambda. A lambda failing on any inner fold is skipped.
double select_riesz_lambda(const LossBinding& loss, const FunctionBinding& theta,
                           const FunctionalSpec& func, SpacePtr space, const Dataset& data,
                           const std::vector<std::size_t>& rows, std::uint64_t seed,
                           const std::vector<double>& grid = default_riesz_lambdas());

}  // namespace autodml
