#include "autodml/dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace autodml {

namespace {

bool is_binary01(double v) { return v == 0.0 || v == 1.0; }

bool is_positive_integer(double v) {
  return std::isfinite(v) && v >= 1.0 && v == std::floor(v);
}

}  // namespace

Dataset::Dataset(std::vector<std::string> columns, Eigen::MatrixXd values, Roles roles)
    : columns_(std::move(columns)), values_(std::move(values)), roles_(std::move(roles)) {
  if (static_cast<std::size_t>(values_.cols()) != columns_.size()) {
    throw DimensionMismatch("dataset has " + std::to_string(columns_.size()) +
                            " column names but " + std::to_string(values_.cols()) +
                            " value columns");
  }
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    auto [it, inserted] = index_.emplace(columns_[j], static_cast<int>(j));
    if (!inserted) {
      throw DomainError("duplicate column name '" + columns_[j] + "'");
    }
  }
  validate();
}

int Dataset::col_index(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int Dataset::require_col(const std::string& name) const {
  int j = col_index(name);
  if (j < 0) {
    throw MissingColumn("column '" + name + "' not present in dataset");
  }
  return j;
}

void Dataset::validate() const {
  auto check_binary = [&](const std::string& name, const char* what) {
    if (name.empty()) return;
    int j = require_col(name);
    for (std::size_t i = 0; i < n_rows(); ++i) {
      double v = value(i, j);
      if (!is_binary01(v)) {
        std::ostringstream msg;
        msg << what << " column '" << name << "' must contain only 0 or 1; found " << v
            << " at row " << i;
        throw InvalidBinary(msg.str());
      }
    }
  };
  check_binary(roles_.treatment, "treatment");
  check_binary(roles_.event, "event");
  if (!roles_.time.empty()) {
    int j = require_col(roles_.time);
    for (std::size_t i = 0; i < n_rows(); ++i) {
      double v = value(i, j);
      if (!is_positive_integer(v)) {
        std::ostringstream msg;
        msg << "time column '" << roles_.time << "' must contain positive integers; found "
            << v << " at row " << i;
        throw InvalidTime(msg.str());
      }
    }
  }
  for (const auto& c : roles_.covariates) require_col(c);
  if (!roles_.outcome.empty()) require_col(roles_.outcome);
}

Dataset load_csv(const std::string& path, const Roles& roles) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("'" + path + "' is empty; expected a header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    out.push_back(cur);
    return out;
  };

  std::vector<std::string> header = split(line);
  const std::size_t p = header.size();

  std::vector<double> cells;
  std::size_t n = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split(line);
    if (fields.size() != p) {
      throw NonNumericCell("row " + std::to_string(lineno) + " of '" + path + "' has " +
                           std::to_string(fields.size()) + " fields; expected " +
                           std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      const std::string& f = fields[j];
      // Trim ASCII whitespace; the numeric grammar itself is delegated to
      // from_chars, which accepts the plain '.'-decimal forms and nothing else.
      std::size_t b = 0, e = f.size();
      while (b < e && std::isspace(static_cast<unsigned char>(f[b]))) ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(f[e - 1]))) --e;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data() + b, f.data() + e, v);
      if (ec != std::errc() || ptr != f.data() + e || b == e || !std::isfinite(v)) {
        throw NonNumericCell("cell at row " + std::to_string(lineno) + ", column '" +
                             header[j] + "' of '" + path + "' is not a finite number: '" +
                             f + "'");
      }
      cells.push_back(v);
    }
    ++n;
  }

  Eigen::MatrixXd values(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * p + j];

  return Dataset(std::move(header), std::move(values), roles);
}

std::vector<std::size_t> all_rows(const Dataset& data) {
  std::vector<std::size_t> rows(data.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace autodml
