#include "autodml/fitted.hpp"

#include <json.hpp>

namespace autodml {

namespace {

void check_term(const FittedTerm& t, int dim) {
  if (!t.space || t.space->d1() != dim || static_cast<int>(t.coeffs.size()) != dim) {
    throw DimensionMismatch("fitted term does not match the function's output dimension");
  }
  for (int b = 0; b < dim; ++b) {
    if (t.coeffs[b].size() != t.space->block_dim(b)) {
      throw DimensionMismatch("coefficient block " + std::to_string(b) + " has " +
                              std::to_string(t.coeffs[b].size()) + " entries; space expects " +
                              std::to_string(t.space->block_dim(b)));
    }
  }
}

}  // namespace

FittedFunction zero_function(int d1) {
  FittedFunction f;
  f.dim = d1;
  return f;
}

FittedFunction make_fitted(SpacePtr space, std::vector<Eigen::VectorXd> coeffs) {
  FittedFunction f;
  f.dim = space->d1();
  FittedTerm t;
  t.space = std::move(space);
  t.coeffs = std::move(coeffs);
  check_term(t, f.dim);
  f.terms.push_back(std::move(t));
  return f;
}

FittedFunction constant_function(double c) {
  Eigen::VectorXd v(1);
  v[0] = c;
  return make_fitted(constant_space(1), {v});
}

Eigen::VectorXd evaluate(const FittedFunction& f, const Obs& z) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.dim);
  for (const auto& t : f.terms)
    for (int b = 0; b < f.dim; ++b)
      out[b] += t.weight * eval_block(*t.space, b, z).dot(t.coeffs[b]);
  return out;
}

double evaluate1(const FittedFunction& f, const Obs& z) {
  if (f.dim != 1) throw DimensionMismatch("evaluate1 called on a function with d1 != 1");
  return evaluate(f, z)[0];
}

Eigen::MatrixXd evaluate_rows(const FittedFunction& f, const Dataset& data,
                              const std::vector<std::size_t>& rows,
                              int override_col, double override_val) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.size(), f.dim);
  for (const auto& t : f.terms)
    for (int b = 0; b < f.dim; ++b)
      out.col(b) += t.weight * design_matrix(*t.space, b, data, rows, override_col, override_val) *
                    t.coeffs[b];
  return out;
}

FittedFunction combine(const FittedFunction& f, double w, const FittedFunction& g) {
  if (f.dim != g.dim) throw DimensionMismatch("combine called on functions of differing dimension");
  FittedFunction out = f;
  out.grad_norm.reset();
  for (const auto& t : g.terms) {
    FittedTerm s = t;
    s.weight *= w;
    out.terms.push_back(std::move(s));
  }
  return out;
}

bool references_column(const FittedFunction& f, const std::string& name) {
  for (const auto& t : f.terms)
    if (t.space->references_column(name)) return true;
  return false;
}

namespace {

using nlohmann::json;

json feature_to_json(const Feature& f) {
  json j;
  switch (f.kind) {
    case Feature::Kind::constant: j["kind"] = "constant"; break;
    case Feature::Kind::power: j["kind"] = "power"; break;
    case Feature::Kind::hinge: j["kind"] = "hinge"; break;
  }
  if (f.kind != Feature::Kind::constant) j["column"] = f.column;
  if (f.kind == Feature::Kind::power) j["degree"] = f.degree;
  if (f.kind == Feature::Kind::hinge) j["knot"] = f.knot;
  if (!f.gate_column.empty()) {
    j["gate_column"] = f.gate_column;
    j["gate_value"] = f.gate_value;
  }
  return j;
}

Feature feature_from_json(const json& j) {
  Feature f;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") f.kind = Feature::Kind::constant;
  else if (kind == "power") f.kind = Feature::Kind::power;
  else if (kind == "hinge") f.kind = Feature::Kind::hinge;
  else throw UnsupportedFamily("unknown feature kind '" + kind + "'");
  if (f.kind != Feature::Kind::constant) f.column = j.at("column").get<std::string>();
  if (f.kind == Feature::Kind::power) f.degree = j.at("degree").get<int>();
  if (f.kind == Feature::Kind::hinge) f.knot = j.at("knot").get<double>();
  if (j.contains("gate_column")) {
    f.gate_column = j.at("gate_column").get<std::string>();
    f.gate_value = j.at("gate_value").get<double>();
  }
  return f;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::polynomial: return "polynomial";
    case Family::piecewise_linear: return "piecewise_linear";
    case Family::additive: return "additive";
    case Family::custom: return "custom";
  }
  return "custom";
}

Family family_from_name(const std::string& s) {
  if (s == "constant") return Family::constant;
  if (s == "polynomial") return Family::polynomial;
  if (s == "piecewise_linear") return Family::piecewise_linear;
  if (s == "additive") return Family::additive;
  if (s == "custom") return Family::custom;
  throw UnsupportedFamily("unknown family '" + s + "'");
}

}  // namespace

std::string to_text(const FittedFunction& f) {
  json terms = json::array();
  for (const auto& t : f.terms) {
    json blocks = json::array();
    json coeffs = json::array();
    for (int b = 0; b < f.dim; ++b) {
      json feats = json::array();
      for (const auto& feat : t.space->blocks[b]) feats.push_back(feature_to_json(feat));
      blocks.push_back(feats);
      coeffs.push_back(std::vector<double>(t.coeffs[b].begin(), t.coeffs[b].end()));
    }
    terms.push_back(json{{"weight", t.weight},
                         {"family", family_name(t.space->family)},
                         {"blocks", blocks},
                         {"coeffs", coeffs}});
  }
  json j{{"dim", f.dim}, {"terms", terms}};
  return j.dump(2);
}

FittedFunction from_text(const std::string& text) {
  json j = json::parse(text);
  FittedFunction f;
  f.dim = j.at("dim").get<int>();
  for (const auto& tj : j.at("terms")) {
    FunctionSpace s;
    s.family = family_from_name(tj.at("family").get<std::string>());
    for (const auto& bj : tj.at("blocks")) {
      std::vector<Feature> block;
      for (const auto& fj : bj) block.push_back(feature_from_json(fj));
      s.blocks.push_back(std::move(block));
    }
    FittedTerm t;
    t.weight = tj.at("weight").get<double>();
    t.space = make_space(std::move(s));
    for (const auto& cj : tj.at("coeffs")) {
      std::vector<double> c = cj.get<std::vector<double>>();
      t.coeffs.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), c.size()));
    }
    check_term(t, f.dim);
    f.terms.push_back(std::move(t));
  }
  return f;
}

}  // namespace autodml
