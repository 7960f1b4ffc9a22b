#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autodml/basis.hpp"

namespace autodml {

// One additive term of a fitted function: weight * (coefficients dot basis).
struct FittedTerm {
  double weight = 1.0;
  SpacePtr space;
  std::vector<Eigen::VectorXd> coeffs;  // one vector per block
};

// A function R^d -> R^d1 represented as a weighted sum of basis expansions.
// Affine combinations are exact: combine() appends terms instead of adding
// coefficient vectors, so spaces never need to match.
struct FittedFunction {
  int dim = 1;
  std::vector<FittedTerm> terms;          // empty = identically zero
  std::optional<double> grad_norm;        // fitting diagnostic, if any
};

FittedFunction zero_function(int d1 = 1);
FittedFunction make_fitted(SpacePtr space, std::vector<Eigen::VectorXd> coeffs);
// Scalar constant c as a fitted function over the constant space.
FittedFunction constant_function(double c);

Eigen::VectorXd evaluate(const FittedFunction& f, const Obs& z);
// d1 == 1 convenience.
double evaluate1(const FittedFunction& f, const Obs& z);

// m x d1 matrix of values over the given rows, with an optional column
// override applied throughout.
Eigen::MatrixXd evaluate_rows(const FittedFunction& f, const Dataset& data,
                              const std::vector<std::size_t>& rows,
                              int override_col = -1, double override_val = 0.0);

// f + w * g, exactly.
FittedFunction combine(const FittedFunction& f, double w, const FittedFunction& g);

bool references_column(const FittedFunction& f, const std::string& name);

// JSON round trip; the schema is documented in the README.
std::string to_text(const FittedFunction& f);
FittedFunction from_text(const std::string& text);

}  // namespace autodml
