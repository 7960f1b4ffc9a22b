// Command-line front door: `artifact estimate` fits one estimator on a CSV
// and writes a JSON report; `artifact simulate` runs a Monte Carlo grid and
// writes a metrics CSV. Config files are JSON; flags override file values.
// Exit codes: 0 ok, 2 config, 3 data, 4 estimation.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "autodml/estimators.hpp"
#include "autodml/problems.hpp"
#include "autodml/simulate.hpp"

namespace {

using nlohmann::json;
using namespace autodml;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open output file: " + out_path);
  out << content;
  if (!out) throw IoError("failed writing output file: " + out_path);
}

int exit_code_for(const Error& e) {
  const std::string& c = e.code();
  if (c == "ConfigError") return 2;
  if (c == "IoError" || c == "MissingColumn" || c == "NonNumericCell" ||
      c == "InvalidBinary" || c == "InvalidTime") {
    return 3;
  }
  return 4;
}

void print_error(const Error& e) {
  json doc;
  doc["error"]["code"] = e.code();
  doc["error"]["message"] = e.what();
  std::cerr << doc.dump() << std::endl;
}

// Field accessors that turn JSON type surprises into ConfigError.
template <class T>
T field(const json& cfg, const std::string& key, const T& fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

template <class T>
T required_field(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError("config is missing required field '" + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

Family parse_family(const std::string& name) {
  if (name == "polynomial") return Family::polynomial;
  if (name == "piecewise_linear") return Family::piecewise_linear;
  throw ConfigError("unknown basis family: " + name);
}

ProblemOptions problem_options(const json& cfg) {
  ProblemOptions opts;
  opts.k = field<int>(cfg, "k", opts.k);
  opts.k_max = field<int>(cfg, "k_max", opts.k_max);
  opts.t0 = field<int>(cfg, "t0", opts.t0);
  opts.family = parse_family(field<std::string>(cfg, "family", "polynomial"));
  return opts;
}

double parse_level(const json& cfg) {
  double level = field<double>(cfg, "level", 0.95);
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie strictly in (0,1)");
  return level;
}

Roles parse_roles(const json& cfg) {
  if (!cfg.contains("roles")) throw ConfigError("config is missing required field 'roles'");
  const json& r = cfg.at("roles");
  if (!r.is_object()) throw ConfigError("config field 'roles' must be an object");
  Roles roles;
  roles.covariates = field<std::vector<std::string>>(r, "covariates", {});
  roles.outcome = field<std::string>(r, "outcome", "");
  roles.treatment = field<std::string>(r, "treatment", "");
  roles.time = field<std::string>(r, "time", "");
  roles.event = field<std::string>(r, "event", "");
  return roles;
}

json roles_to_json(const Roles& roles) {
  json r;
  r["covariates"] = roles.covariates;
  if (!roles.outcome.empty()) r["outcome"] = roles.outcome;
  if (!roles.treatment.empty()) r["treatment"] = roles.treatment;
  if (!roles.time.empty()) r["time"] = roles.time;
  if (!roles.event.empty()) r["event"] = roles.event;
  return r;
}

int cmd_estimate(const json& cfg_in, const std::string& data_flag, const std::string& out_flag) {
  json cfg = cfg_in;
  if (!data_flag.empty()) cfg["data"] = data_flag;

  const std::string data_path = required_field<std::string>(cfg, "data");
  const std::string problem_name = required_field<std::string>(cfg, "problem");
  const std::string estimator = required_field<std::string>(cfg, "estimator");
  const int folds = field<int>(cfg, "folds", 5);
  const std::uint64_t seed = field<std::uint64_t>(cfg, "seed", 1);
  const double level = parse_level(cfg);
  const Roles roles = parse_roles(cfg);
  const ProblemOptions opts = problem_options(cfg);
  std::optional<double> riesz_lambda;
  if (cfg.contains("riesz_lambda")) riesz_lambda = field<double>(cfg, "riesz_lambda", 0.0);

  Dataset data = load_csv(data_path, roles);
  CrossFitPlan plan = make_folds(data.n_rows(), folds, seed);
  ProblemSpec problem = make_problem(problem_name, data, opts);
  if (riesz_lambda) problem.riesz_lambda = riesz_lambda;

  EstimateReport rep = run_estimator(estimator, data, plan, problem, level);

  json resolved;
  resolved["command"] = "estimate";
  resolved["data"] = data_path;
  resolved["problem"] = problem_name;
  resolved["estimator"] = estimator;
  resolved["folds"] = folds;
  resolved["seed"] = seed;
  resolved["level"] = level;
  resolved["roles"] = roles_to_json(roles);
  resolved["k"] = opts.k;
  resolved["k_max"] = opts.k_max;
  resolved["t0"] = opts.t0;
  resolved["family"] = field<std::string>(cfg, "family", "polynomial");
  if (riesz_lambda) resolved["riesz_lambda"] = *riesz_lambda;
  rep.config_json = resolved.dump();

  write_output(out_flag.empty() ? field<std::string>(cfg, "out", "") : out_flag,
               report_to_json(rep));
  return 0;
}

DgpSpec::Kind parse_dgp(const std::string& name) {
  if (name == "cate_rlearner") return DgpSpec::Kind::cate_rlearner;
  if (name == "beta_geometric") return DgpSpec::Kind::beta_geometric;
  throw ConfigError("unknown dgp: " + name);
}

int cmd_simulate(const json& cfg_in, const std::string& out_flag, int workers_flag) {
  const json& cfg = cfg_in;

  SimConfig sim;
  const std::string dgp_name = required_field<std::string>(cfg, "dgp");
  DgpSpec base;
  base.kind = parse_dgp(dgp_name);
  base.local_perturbation = field<bool>(cfg, "local_perturbation", false);
  base.censor = field<int>(cfg, "censor", 6);
  base.t0 = field<int>(cfg, "t0", 12);
  if (base.censor < 1) throw ConfigError("censor must be at least 1");
  if (base.t0 < 1) throw ConfigError("t0 must be at least 1");

  std::vector<std::size_t> ns;
  if (!cfg.contains("n")) throw ConfigError("config is missing required field 'n'");
  if (cfg.at("n").is_array()) {
    ns = field<std::vector<std::size_t>>(cfg, "n", {});
  } else {
    ns.push_back(required_field<std::size_t>(cfg, "n"));
  }
  if (ns.empty()) throw ConfigError("config field 'n' must name at least one sample size");
  for (std::size_t n : ns) {
    DgpSpec spec = base;
    spec.n = n;
    sim.grid.push_back(spec);
  }

  sim.estimators = required_field<std::vector<std::string>>(cfg, "estimators");
  sim.replicates = field<int>(cfg, "replicates", 100);
  if (sim.replicates < 1) throw ConfigError("replicates must be at least 1");
  sim.base_seed = field<std::uint64_t>(cfg, "seed", 1);
  sim.folds = field<int>(cfg, "folds", 5);
  sim.level = parse_level(cfg);
  sim.split_nuisance = field<bool>(cfg, "split_nuisance", false);
  sim.problem = problem_options(cfg);
  sim.workers = workers_flag > 0 ? workers_flag : field<int>(cfg, "workers", 1);

  // The embedded config drops the worker count on purpose: the CSV must be
  // byte-identical for any --workers value.
  json resolved;
  resolved["command"] = "simulate";
  resolved["dgp"] = dgp_name;
  resolved["n"] = ns;
  resolved["local_perturbation"] = base.local_perturbation;
  resolved["censor"] = base.censor;
  resolved["t0"] = base.t0;
  resolved["estimators"] = sim.estimators;
  resolved["replicates"] = sim.replicates;
  resolved["seed"] = sim.base_seed;
  resolved["folds"] = sim.folds;
  resolved["level"] = sim.level;
  resolved["split_nuisance"] = sim.split_nuisance;
  resolved["k"] = sim.problem.k;
  resolved["k_max"] = sim.problem.k_max;
  resolved["family"] = field<std::string>(cfg, "family", "polynomial");

  MetricsTable table = monte_carlo(sim);
  std::string csv = metrics_to_csv(table, {"config " + resolved.dump()});

  write_output(out_flag.empty() ? field<std::string>(cfg, "out", "") : out_flag, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debiased machine learning estimators for smooth functionals"};
  app.require_subcommand(1);

  std::string config_path, data_flag, out_flag;
  int workers_flag = 0;

  CLI::App* est = app.add_subcommand("estimate", "Fit one estimator on a CSV dataset");
  est->add_option("--config", config_path, "JSON config file")->required();
  est->add_option("--data", data_flag, "CSV data file (overrides config)");
  est->add_option("--out", out_flag, "Report path (default stdout)");

  CLI::App* sim = app.add_subcommand("simulate", "Run a Monte Carlo study");
  sim->add_option("--config", config_path, "JSON config file")->required();
  sim->add_option("--out", out_flag, "Metrics CSV path (default stdout)");
  sim->add_option("--workers", workers_flag, "Worker threads (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    json cfg = load_config(config_path);
    if (est->parsed()) return cmd_estimate(cfg, data_flag, out_flag);
    return cmd_simulate(cfg, out_flag, workers_flag);
  } catch (const Error& e) {
    print_error(e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    print_error(Error("Internal", e.what()));
    return 4;
  }
}
