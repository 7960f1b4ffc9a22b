#include "autodml/basis.hpp"

#include <cmath>

namespace autodml {

int FunctionSpace::total_dim() const {
  int d = 0;
  for (const auto& b : blocks) d += static_cast<int>(b.size());
  return d;
}

bool FunctionSpace::references_column(const std::string& name) const {
  for (const auto& block : blocks)
    for (const auto& f : block)
      if (f.column == name || f.gate_column == name) return true;
  return false;
}

namespace {

int resolve(const Dataset& data, const std::string& name) {
  int j = data.col_index(name);
  if (j < 0) throw MissingCovariate("function space references column '" + name +
                                    "', which the dataset does not contain");
  return j;
}

double eval_resolved(const Feature& f, const Obs& z, int col, int gate_col) {
  if (gate_col >= 0 && z.value(gate_col) != f.gate_value) return 0.0;
  switch (f.kind) {
    case Feature::Kind::constant:
      return 1.0;
    case Feature::Kind::power: {
      double x = z.value(col);
      double v = 1.0;
      for (int d = 0; d < f.degree; ++d) v *= x;
      return v;
    }
    case Feature::Kind::hinge: {
      double x = z.value(col);
      return x > f.knot ? x - f.knot : 0.0;
    }
  }
  return 0.0;
}

}  // namespace

double eval_feature(const Feature& f, const Obs& z) {
  int col = f.kind == Feature::Kind::constant ? -1 : resolve(*z.data, f.column);
  int gate = f.gate_column.empty() ? -1 : resolve(*z.data, f.gate_column);
  return eval_resolved(f, z, col, gate);
}

Eigen::VectorXd eval_block(const FunctionSpace& s, int b, const Obs& z) {
  const auto& feats = s.blocks[b];
  Eigen::VectorXd out(feats.size());
  for (std::size_t j = 0; j < feats.size(); ++j) out[j] = eval_feature(feats[j], z);
  return out;
}

Eigen::MatrixXd design_matrix(const FunctionSpace& s, int b, const Dataset& data,
                              const std::vector<std::size_t>& rows,
                              int override_col, double override_val) {
  const auto& feats = s.blocks[b];
  std::vector<int> cols(feats.size(), -1), gates(feats.size(), -1);
  for (std::size_t j = 0; j < feats.size(); ++j) {
    if (feats[j].kind != Feature::Kind::constant) cols[j] = resolve(data, feats[j].column);
    if (!feats[j].gate_column.empty()) gates[j] = resolve(data, feats[j].gate_column);
  }
  Eigen::MatrixXd out(rows.size(), feats.size());
  Obs z{&data, 0, override_col, override_val};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    z.row = rows[i];
    for (std::size_t j = 0; j < feats.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          eval_resolved(feats[j], z, cols[j], gates[j]);
  }
  return out;
}

namespace {

// Features appended by step k of the sieve for one column. Step 1 is the
// linear term for both families. Piecewise-linear step k >= 2 adds the
// 2^(k-2) hinges at odd multiples of (hi-lo)/2^(k-1), so each step bisects
// the cells of the previous one and spans remain nested.
void append_step(std::vector<Feature>& out, const SieveConfig& cfg, std::size_t c, int k) {
  if (cfg.binary.size() > c && cfg.binary[c] && k >= 2) return;
  const std::string& col = cfg.columns[c];
  if (cfg.family == Family::polynomial || k == 1) {
    Feature f;
    f.kind = Feature::Kind::power;
    f.column = col;
    f.degree = k;
    out.push_back(f);
    return;
  }
  if (cfg.family != Family::piecewise_linear) {
    throw UnsupportedFamily("nested_sieve supports polynomial and piecewise_linear families");
  }
  double lo = -1.0, hi = 1.0;
  if (cfg.ranges.size() > c) {
    lo = cfg.ranges[c].first;
    hi = cfg.ranges[c].second;
  }
  int m = 1 << (k - 2);
  for (int i = 1; i <= m; ++i) {
    Feature f;
    f.kind = Feature::Kind::hinge;
    f.column = col;
    f.knot = lo + (hi - lo) * (2.0 * i - 1.0) / static_cast<double>(2 * m);
    out.push_back(f);
  }
}

}  // namespace

FunctionSpace nested_sieve(const SieveConfig& cfg, int k) {
  if (k < 1) throw DomainError("sieve step k must be at least 1; got " + std::to_string(k));
  if (cfg.d1 < 1) throw DimensionMismatch("sieve output dimension must be positive");
  std::vector<Feature> block;
  block.push_back(Feature{});  // intercept
  for (int step = 1; step <= k; ++step)
    for (std::size_t c = 0; c < cfg.columns.size(); ++c) append_step(block, cfg, c, step);

  FunctionSpace s;
  s.family = cfg.columns.size() == 1 ? cfg.family : Family::additive;
  s.blocks.assign(cfg.d1, block);
  return s;
}

SpacePtr make_space(FunctionSpace s) { return std::make_shared<const FunctionSpace>(std::move(s)); }

SpacePtr sieve_space(const SieveConfig& cfg, int k) { return make_space(nested_sieve(cfg, k)); }

SpacePtr constant_space(int d1) {
  FunctionSpace s;
  s.family = Family::constant;
  s.blocks.assign(d1, {Feature{}});
  return make_space(std::move(s));
}

SpacePtr treatment_saturated(const FunctionSpace& base, const std::string& treatment_column) {
  if (base.d1() != 1) throw DimensionMismatch("treatment_saturated expects a scalar base space");
  std::vector<Feature> block;
  for (double v : {1.0, 0.0}) {
    for (const auto& f : base.blocks[0]) {
      if (!f.gate_column.empty())
        throw UnsupportedFamily("treatment_saturated expects an ungated base space");
      Feature g = f;
      g.gate_column = treatment_column;
      g.gate_value = v;
      block.push_back(g);
    }
  }
  FunctionSpace s;
  s.family = Family::custom;
  s.blocks.assign(1, std::move(block));
  return make_space(std::move(s));
}

}  // namespace autodml
