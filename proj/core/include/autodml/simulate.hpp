#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autodml/problems.hpp"
#include "autodml/rng.hpp"

namespace autodml {

// The two study designs the harness can draw from. cate_rlearner emits
// (x1,x2,x3,a,y); beta_geometric emits (x1,x2,x3,a,t,d) with administrative
// censoring. fix_x / fix_a freeze the covariates or the treatment, which the
// tests use to collapse a design onto a single closed-form cell.
struct DgpSpec {
  enum class Kind { cate_rlearner, beta_geometric };
  Kind kind = Kind::cate_rlearner;
  std::size_t n = 1000;
  bool local_perturbation = false;  // cate: adds the 1/sqrt(n) fluctuation term
  int censor = 6;                   // bg: administrative censoring time
  int t0 = 12;                      // bg: survival horizon reported on
  std::optional<double> fix_x;
  std::optional<double> fix_a;
};

// Closed-form pieces of the designs, exposed so tests can build independent
// oracles against the same expressions the generator uses.
double cate_propensity(double x1, double x2, double x3);
double cate_mu0(double a, double x1, double x2, double x3, std::size_t n, bool perturb);
double cate_sigma0(double x1, double x3);
double bg_propensity(double x1, double x2, double x3);
void bg_shapes(double a, double x1, double x2, double x3, double* a0, double* b0);

// Draws spec.n rows unless n_rows overrides the count. The override exists for
// sample splitting, where the harness wants 2n rows while the design keeps the
// declared n (the cate fluctuation term scales with the declared n).
Dataset gen_dataset(const DgpSpec& spec, std::uint64_t seed, std::size_t n_rows = 0);

// The estimand value under the design: analytic for cate_rlearner (including
// the local-perturbation shift), quasi-Monte Carlo quadrature for the
// beta-geometric survival mean (cached per design).
double true_psi(const DgpSpec& spec);

struct MetricsRow {
  std::string estimator;
  std::size_t n = 0;
  int replicates = 0;
  double bias = 0.0;
  double se = 0.0;  // empirical sd of the estimates across replicates
  double coverage = 0.0;
  int failures = 0;
  double true_psi = 0.0;
};
using MetricsTable = std::vector<MetricsRow>;

struct ReplicateOutcome {
  bool ok = false;
  double psi = 0.0, lo = 0.0, hi = 0.0;
};
MetricsRow aggregate_metrics(const std::string& estimator, std::size_t n, double truth,
                             const std::vector<ReplicateOutcome>& outcomes);

struct SimConfig {
  std::vector<DgpSpec> grid;
  std::vector<std::string> estimators;
  int replicates = 100;
  std::uint64_t base_seed = 1;
  int folds = 5;
  ProblemOptions problem;
  double level = 0.95;
  bool split_nuisance = false;  // 2n rows; train on the first n, average on the rest
  int workers = 1;
};

// Runs replicates r = 0..R-1 per design with per-replicate seed base_seed+r,
// shares the dataset, folds, and cross-fitting across the estimators of a
// replicate, and aggregates in replicate order, so the table is identical for
// any worker count.
MetricsTable monte_carlo(const SimConfig& cfg);

// CSV per the schema in the README: a '#'-prefixed header block carrying
// config_comment lines, then one row per (design, estimator).
std::string metrics_to_csv(const MetricsTable& table,
                           const std::vector<std::string>& config_comment = {});

}  // namespace autodml
