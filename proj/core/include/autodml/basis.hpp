#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "autodml/dataset.hpp"
#include "autodml/errors.hpp"

namespace autodml {

enum class Family { constant, polynomial, piecewise_linear, additive, custom };

// One scalar basis function of an observation. An optional gate multiplies by
// the indicator 1(z[gate_column] == gate_value); gated copies of a covariate
// basis are how treatment-saturated spaces are built.
struct Feature {
  enum class Kind { constant, power, hinge };
  Kind kind = Kind::constant;
  std::string column;       // unused for constant
  int degree = 1;           // power: x^degree
  double knot = 0.0;        // hinge: max(x - knot, 0)
  std::string gate_column;  // empty = no gate
  double gate_value = 1.0;
};

// A finite-dimensional space of functions R^d -> R^d1, block-structured: one
// independent coefficient block per output dimension. Spaces built by
// nested_sieve are nested by construction, smaller k being a prefix of larger.
struct FunctionSpace {
  Family family = Family::custom;
  std::vector<std::vector<Feature>> blocks;

  int d1() const { return static_cast<int>(blocks.size()); }
  int block_dim(int b) const { return static_cast<int>(blocks[b].size()); }
  int total_dim() const;
  bool references_column(const std::string& name) const;
};

using SpacePtr = std::shared_ptr<const FunctionSpace>;

double eval_feature(const Feature& f, const Obs& z);

// Basis vector of block b at one observation.
Eigen::VectorXd eval_block(const FunctionSpace& s, int b, const Obs& z);

// m x block_dim(b) design matrix over the given rows, with an optional column
// override applied to every row (counterfactual designs). Column names are
// resolved once.
Eigen::MatrixXd design_matrix(const FunctionSpace& s, int b, const Dataset& data,
                              const std::vector<std::size_t>& rows,
                              int override_col = -1, double override_val = 0.0);

// Describes a nested sieve over named covariate columns. Step k of the sieve
// appends, per column, the degree-k monomial (polynomial) or the level-k
// dyadic hinges over the column's range (piecewise_linear). Columns flagged
// binary stop after their linear term. All d1 blocks share the structure.
struct SieveConfig {
  Family family = Family::polynomial;
  std::vector<std::string> columns;
  std::vector<std::pair<double, double>> ranges;  // per column; default [-1, 1]
  std::vector<bool> binary;                       // per column; default false
  int d1 = 1;
};

// The k-th space of the sieve: intercept plus steps 1..k. Requires k >= 1.
FunctionSpace nested_sieve(const SieveConfig& cfg, int k);

SpacePtr make_space(FunctionSpace s);
SpacePtr sieve_space(const SieveConfig& cfg, int k);
SpacePtr constant_space(int d1 = 1);

// Two gated copies of base (d1 must be 1): every feature multiplied by
// 1(treatment==1), then by 1(treatment==0). The span contains all functions
// of the form 1(a=v) * f(x) with f in base, so representers such as inverse
// propensity weights are expressible once base is rich enough.
SpacePtr treatment_saturated(const FunctionSpace& base, const std::string& treatment_column);

}  // namespace autodml
