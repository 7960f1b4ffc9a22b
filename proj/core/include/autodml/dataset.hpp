#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "autodml/errors.hpp"

namespace autodml {

// Column roles a problem relies on. Any subset may be set (empty string means
// unset); operations that need a role throw MissingColumn when it is absent.
struct Roles {
  std::vector<std::string> covariates;
  std::string outcome;
  std::string treatment;
  std::string time;
  std::string event;
};

// Immutable numeric table with named columns. Role-tagged columns are
// validated on construction: treatment and event must be exactly 0/1, the
// time column must hold positive integers.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> columns, Eigen::MatrixXd values, Roles roles);

  std::size_t n_rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const Roles& roles() const { return roles_; }
  const Eigen::MatrixXd& values() const { return values_; }

  // Index of a named column, or -1 when absent.
  int col_index(const std::string& name) const;
  // Index of a named column; throws MissingColumn when absent.
  int require_col(const std::string& name) const;

  double value(std::size_t row, int col) const { return values_(static_cast<Eigen::Index>(row), col); }
  Eigen::VectorXd column(int col) const { return values_.col(col); }

 private:
  void validate() const;

  std::vector<std::string> columns_;
  Eigen::MatrixXd values_;
  Roles roles_;
  std::unordered_map<std::string, int> index_;
};

// One observation, optionally with a single column overridden. The override
// is how counterfactual evaluations such as theta(1, x) are expressed without
// copying rows.
struct Obs {
  const Dataset* data = nullptr;
  std::size_t row = 0;
  int override_col = -1;
  double override_val = 0.0;

  double value(int col) const {
    return col == override_col ? override_val : data->value(row, col);
  }
  Obs with(int col, double v) const {
    Obs o = *this;
    o.override_col = col;
    o.override_val = v;
    return o;
  }
};

// Loads a comma-separated UTF-8 file with a header row and '.' decimal
// separator. Every cell must parse as a finite number; violations are
// reported with their row and column. Role columns must exist and satisfy the
// role constraints above.
Dataset load_csv(const std::string& path, const Roles& roles);

// All row indices 0..n-1, in order. Convenience for whole-sample operations.
std::vector<std::size_t> all_rows(const Dataset& data);

}  // namespace autodml
