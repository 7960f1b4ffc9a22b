// Drives the installed command-line binary end to end: fixture CSVs and JSON
// configs go into a scratch directory, the binary runs via the shell, and the
// tests assert on exit codes, report contents, and error documents.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "autodml/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace autodml;

namespace {

const fs::path& scratch() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "autodml_cli_scratch";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string path_in(const std::string& name) { return (scratch() / name).string(); }

int run(const std::string& args, const std::string& tag) {
  std::string cmd = std::string(ARTIFACT_BIN) + " " + args + " > " + path_in(tag + ".out") +
                    " 2> " + path_in(tag + ".err");
  int status = std::system(cmd.c_str());
#ifdef _WIN32
  return status;
#else
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  const auto& cols = d.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", d.value(i, static_cast<int>(c)));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

std::string cate_csv() {
  static std::string path = [] {
    DgpSpec spec;
    spec.kind = DgpSpec::Kind::cate_rlearner;
    spec.n = 200;
    std::string p = path_in("cate.csv");
    write_dataset(gen_dataset(spec, 3), p);
    return p;
  }();
  return path;
}

std::string bg_csv() {
  static std::string path = [] {
    DgpSpec spec;
    spec.kind = DgpSpec::Kind::beta_geometric;
    spec.n = 150;
    std::string p = path_in("bg.csv");
    write_dataset(gen_dataset(spec, 4), p);
    return p;
  }();
  return path;
}

json cate_roles() {
  json r;
  r["covariates"] = {"x1", "x2", "x3"};
  r["treatment"] = "a";
  r["outcome"] = "y";
  return r;
}

json bg_roles() {
  json r;
  r["covariates"] = {"x1", "x2", "x3"};
  r["treatment"] = "a";
  r["time"] = "t";
  r["event"] = "d";
  return r;
}

json error_doc(const std::string& tag) { return json::parse(slurp(path_in(tag + ".err"))); }

}  // namespace

TEST_CASE("estimate writes a full report and exits cleanly") {
  json cfg;
  cfg["data"] = cate_csv();
  cfg["problem"] = "ate_rlearner";
  cfg["estimator"] = "tmle";
  cfg["folds"] = 4;
  cfg["seed"] = 7;
  cfg["k"] = 2;
  cfg["k_max"] = 3;
  cfg["roles"] = cate_roles();
  write_file(path_in("est.json"), cfg.dump(2));

  int code = run("estimate --config " + path_in("est.json") + " --out " + path_in("report.json"),
                 "est");
  REQUIRE(code == 0);
  json rep = json::parse(slurp(path_in("report.json")));
  CHECK(rep.at("estimator") == "tmle");
  CHECK(rep.at("n") == 200);
  double psi = rep.at("psi_hat").get<double>();
  double se = rep.at("se").get<double>();
  CHECK(std::isfinite(psi));
  CHECK(se > 0.0);
  CHECK(rep.at("ci").at("lo").get<double>() < rep.at("ci").at("hi").get<double>());
  CHECK(rep.at("influence").size() == 200);
  CHECK(rep.at("diagnostics").contains("epsilon"));
  // The report embeds the fully resolved run configuration.
  const json& rc = rep.at("config");
  CHECK(rc.at("command") == "estimate");
  CHECK(rc.at("estimator") == "tmle");
  CHECK(rc.at("folds") == 4);
  CHECK(rc.at("seed") == 7);
  CHECK(rc.at("level") == 0.95);
  CHECK(rc.at("data") == cate_csv());
  CHECK(rc.at("roles").at("treatment") == "a");
}

TEST_CASE("estimate --data overrides the config path and stdout is the default sink") {
  json cfg;
  cfg["data"] = path_in("does_not_exist.csv");
  cfg["problem"] = "ate_rlearner";
  cfg["estimator"] = "onestep";
  cfg["folds"] = 3;
  cfg["k"] = 1;
  cfg["k_max"] = 2;
  cfg["roles"] = cate_roles();
  write_file(path_in("ovr.json"), cfg.dump());

  int code = run("estimate --config " + path_in("ovr.json") + " --data " + cate_csv(), "ovr");
  REQUIRE(code == 0);
  json rep = json::parse(slurp(path_in("ovr.out")));
  CHECK(rep.at("estimator") == "onestep");
  CHECK(rep.at("config").at("data") == cate_csv());

  // Without the override the missing file is a data error.
  int code2 = run("estimate --config " + path_in("ovr.json"), "ovr2");
  CHECK(code2 == 3);
  CHECK(error_doc("ovr2").at("error").at("code") == "IoError");
}

TEST_CASE("estimate on the survival problem reports a probability") {
  json cfg;
  cfg["data"] = bg_csv();
  cfg["problem"] = "bg_survival";
  cfg["estimator"] = "onestep_stabilized";
  cfg["folds"] = 3;
  cfg["k"] = 1;
  cfg["t0"] = 6;
  cfg["roles"] = bg_roles();
  write_file(path_in("bg.json"), cfg.dump());

  int code = run("estimate --config " + path_in("bg.json") + " --out " + path_in("bg_report.json"),
                 "bg");
  REQUIRE(code == 0);
  json rep = json::parse(slurp(path_in("bg_report.json")));
  double psi = rep.at("psi_hat").get<double>();
  CHECK(psi > 0.0);
  CHECK(psi < 1.0);
  CHECK(rep.at("diagnostics").contains("epsilon"));
  CHECK(rep.at("config").at("t0") == 6);
}

TEST_CASE("config mistakes exit with code 2 and a structured error") {
  json cfg;
  cfg["data"] = cate_csv();
  cfg["problem"] = "ate_rlearner";
  cfg["estimator"] = "not_an_estimator";
  cfg["roles"] = cate_roles();
  write_file(path_in("bad_est.json"), cfg.dump());
  CHECK(run("estimate --config " + path_in("bad_est.json"), "bad_est") == 2);
  CHECK(error_doc("bad_est").at("error").at("code") == "ConfigError");

  cfg["estimator"] = "tmle";
  cfg["level"] = 1.5;
  write_file(path_in("bad_level.json"), cfg.dump());
  CHECK(run("estimate --config " + path_in("bad_level.json"), "bad_level") == 2);
  CHECK(error_doc("bad_level").at("error").at("code") == "ConfigError");

  write_file(path_in("not_json.json"), "{this is not json");
  CHECK(run("estimate --config " + path_in("not_json.json"), "not_json") == 2);
  CHECK(error_doc("not_json").at("error").at("code") == "ConfigError");

  json missing;
  missing["data"] = cate_csv();
  missing["roles"] = cate_roles();
  write_file(path_in("missing.json"), missing.dump());
  CHECK(run("estimate --config " + path_in("missing.json"), "missing") == 2);
  std::string msg = error_doc("missing").at("error").at("message").get<std::string>();
  CHECK(msg.find("problem") != std::string::npos);

  // Flag errors from the parser itself also land on 2.
  CHECK(run("estimate", "no_cfg") == 2);
  CHECK(run("bogus_subcommand", "bogus") == 2);
}

TEST_CASE("data problems exit with code 3") {
  write_file(path_in("bad_cell.csv"), "x1,x2,x3,a,y\n0.1,0.2,0.3,1,oops\n0.2,0.1,0.0,0,1.5\n");
  json cfg;
  cfg["data"] = path_in("bad_cell.csv");
  cfg["problem"] = "ate_rlearner";
  cfg["estimator"] = "onestep";
  cfg["roles"] = cate_roles();
  write_file(path_in("bad_cell.json"), cfg.dump());
  CHECK(run("estimate --config " + path_in("bad_cell.json"), "bad_cell") == 3);
  CHECK(error_doc("bad_cell").at("error").at("code") == "NonNumericCell");

  json miss;
  miss["data"] = cate_csv();
  miss["problem"] = "ate_rlearner";
  miss["estimator"] = "onestep";
  miss["roles"] = cate_roles();
  miss["roles"]["outcome"] = "nope";
  write_file(path_in("miss_col.json"), miss.dump());
  CHECK(run("estimate --config " + path_in("miss_col.json"), "miss_col") == 3);
  CHECK(error_doc("miss_col").at("error").at("code") == "MissingColumn");
}

TEST_CASE("estimation failures exit with code 4") {
  json cfg;
  cfg["data"] = cate_csv();
  cfg["problem"] = "ate_rlearner";
  cfg["estimator"] = "onestep";
  cfg["folds"] = 100000;  // more folds than rows
  cfg["roles"] = cate_roles();
  write_file(path_in("folds.json"), cfg.dump());
  CHECK(run("estimate --config " + path_in("folds.json"), "folds") == 4);
  CHECK(error_doc("folds").at("error").at("code") == "InvalidFoldCount");
}

TEST_CASE("simulate produces a deterministic metrics csv") {
  json cfg;
  cfg["dgp"] = "cate_rlearner";
  cfg["n"] = 100;
  cfg["estimators"] = {"onestep"};
  cfg["replicates"] = 3;
  cfg["seed"] = 5;
  cfg["folds"] = 3;
  cfg["k"] = 2;
  write_file(path_in("sim.json"), cfg.dump());

  int c1 = run("simulate --config " + path_in("sim.json") + " --out " + path_in("m1.csv"), "sim1");
  int c2 = run("simulate --config " + path_in("sim.json") + " --out " + path_in("m2.csv") +
                   " --workers 3",
               "sim2");
  REQUIRE(c1 == 0);
  REQUIRE(c2 == 0);
  std::string m1 = slurp(path_in("m1.csv"));
  std::string m2 = slurp(path_in("m2.csv"));
  CHECK(m1 == m2);  // byte identical across worker counts
  CHECK(m1.find("estimator,n,R,bias,se,coverage,failures,true_psi\n") != std::string::npos);
  CHECK(m1.find("onestep,100,3,") != std::string::npos);

  // The embedded config names every resolved knob except the worker count.
  std::string first_line = m1.substr(0, m1.find('\n'));
  REQUIRE(first_line.rfind("# config ", 0) == 0);
  json embedded = json::parse(first_line.substr(9));
  CHECK(embedded.at("dgp") == "cate_rlearner");
  CHECK(embedded.at("seed") == 5);
  CHECK(embedded.at("replicates") == 3);
  CHECK(!embedded.contains("workers"));
}

TEST_CASE("simulate grids over sample sizes and writes to the config sink") {
  json cfg;
  cfg["dgp"] = "cate_rlearner";
  cfg["n"] = {80, 120};
  cfg["estimators"] = {"onestep"};
  cfg["replicates"] = 2;
  cfg["folds"] = 3;
  cfg["k"] = 1;
  cfg["out"] = path_in("grid.csv");
  write_file(path_in("grid.json"), cfg.dump());
  REQUIRE(run("simulate --config " + path_in("grid.json"), "grid") == 0);
  std::string csv = slurp(path_in("grid.csv"));
  CHECK(csv.find("onestep,80,2,") != std::string::npos);
  CHECK(csv.find("onestep,120,2,") != std::string::npos);
}

TEST_CASE("simulate config validation") {
  json cfg;
  cfg["dgp"] = "cate_rlearner";
  cfg["n"] = 100;
  cfg["estimators"] = {"onestep"};
  cfg["replicates"] = 0;
  write_file(path_in("r0.json"), cfg.dump());
  CHECK(run("simulate --config " + path_in("r0.json"), "r0") == 2);
  CHECK(error_doc("r0").at("error").at("code") == "ConfigError");

  cfg["replicates"] = 2;
  cfg["dgp"] = "mystery";
  write_file(path_in("dgp.json"), cfg.dump());
  CHECK(run("simulate --config " + path_in("dgp.json"), "dgp") == 2);

  CHECK(run("simulate --config " + path_in("nowhere.json"), "no_file") == 3);
  CHECK(error_doc("no_file").at("error").at("code") == "IoError");
}

TEST_CASE("help exits zero and names both subcommands") {
  CHECK(run("--help", "help") == 0);
  std::string out = slurp(path_in("help.out"));
  CHECK(out.find("estimate") != std::string::npos);
  CHECK(out.find("simulate") != std::string::npos);
}
