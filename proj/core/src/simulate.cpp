#include "autodml/simulate.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include "autodml/bg.hpp"

namespace autodml {

namespace {

double expit(double q) {
  return q >= 0.0 ? 1.0 / (1.0 + std::exp(-q)) : std::exp(q) / (1.0 + std::exp(q));
}

constexpr double kSqrt3 = 1.7320508075688772935274463415058724;

}  // namespace

double cate_propensity(double x1, double x2, double x3) {
  return expit(std::sin(2.0 * x1) + 2.0 * x2 + std::abs(x3));
}

double cate_mu0(double a, double x1, double x2, double x3, std::size_t n, bool perturb) {
  double mu = std::sin(2.0 * x1) + std::abs(x3) +
              a * (0.3 + 2.0 * x3 * x3 + std::sin(2.0 * x1));
  if (perturb) {
    double pi_add = expit(x2);
    double omega = pi_add * (1.0 - pi_add);
    mu += (a - pi_add) / omega / std::sqrt(static_cast<double>(n));
  }
  return mu;
}

double cate_sigma0(double x1, double x3) { return 0.5 + (x1 + x3) / 8.0; }

double bg_propensity(double x1, double x2, double x3) {
  return expit(2.0 * kSqrt3 * (x1 + x2 + x3));
}

void bg_shapes(double a, double x1, double x2, double x3, double* a0, double* b0) {
  double s = kSqrt3 * (x1 + x2 + x3);
  *a0 = -0.1 + s + 0.25 * a;
  *b0 = s + 0.1;
}

Dataset gen_dataset(const DgpSpec& spec, std::uint64_t seed, std::size_t n_rows) {
  const std::size_t n = n_rows == 0 ? spec.n : n_rows;
  Rng rng(seed);

  auto draw_x = [&](double* x) {
    for (int j = 0; j < 3; ++j) x[j] = spec.fix_x ? *spec.fix_x : rng.uniform(-1.0, 1.0);
  };

  if (spec.kind == DgpSpec::Kind::cate_rlearner) {
    Eigen::MatrixXd values(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
      double x[3];
      draw_x(x);
      double a = spec.fix_a ? *spec.fix_a
                            : static_cast<double>(rng.bernoulli(cate_propensity(x[0], x[1], x[2])));
      double y = rng.normal(cate_mu0(a, x[0], x[1], x[2], spec.n, spec.local_perturbation),
                            cate_sigma0(x[0], x[2]));
      values.row(i) << x[0], x[1], x[2], a, y;
    }
    Roles roles;
    roles.covariates = {"x1", "x2", "x3"};
    roles.treatment = "a";
    roles.outcome = "y";
    return Dataset({"x1", "x2", "x3", "a", "y"}, std::move(values), roles);
  }

  Eigen::MatrixXd values(n, 6);
  for (std::size_t i = 0; i < n; ++i) {
    double x[3];
    draw_x(x);
    double a = spec.fix_a ? *spec.fix_a
                          : static_cast<double>(rng.bernoulli(bg_propensity(x[0], x[1], x[2])));
    double a0, b0;
    bg_shapes(a, x[0], x[1], x[2], &a0, &b0);
    const double alpha = std::exp(a0), beta = std::exp(b0);
    // Sequential draws against the marginal discrete hazard; administrative
    // censoring stops the walk at spec.censor.
    int t = spec.censor;
    double delta = 0.0;
    for (int s = 1; s <= spec.censor; ++s) {
      if (rng.uniform() < alpha / (alpha + beta + s - 1)) {
        t = s;
        delta = 1.0;
        break;
      }
    }
    values.row(i) << x[0], x[1], x[2], a, static_cast<double>(t), delta;
  }
  Roles roles;
  roles.covariates = {"x1", "x2", "x3"};
  roles.treatment = "a";
  roles.time = "t";
  roles.event = "d";
  return Dataset({"x1", "x2", "x3", "a", "t", "d"}, std::move(values), roles);
}

namespace {

// Radical-inverse (van der Corput) sequence in the given base; bases 2, 3, 5
// give the 3-dimensional Halton points the quadrature rides on.
double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

double bg_true_psi(const DgpSpec& spec) {
  auto cell = [&](double x1, double x2, double x3) {
    auto surv = [&](double a) {
      double a0, b0;
      bg_shapes(a, x1, x2, x3, &a0, &b0);
      return std::exp(bg_log_survival(a0, b0, spec.t0));
    };
    if (spec.fix_a) return surv(*spec.fix_a);
    double pi = bg_propensity(x1, x2, x3);
    return pi * surv(1.0) + (1.0 - pi) * surv(0.0);
  };
  if (spec.fix_x) return cell(*spec.fix_x, *spec.fix_x, *spec.fix_x);

  const std::uint64_t N = 1000000;
  double total = 0.0;
  for (std::uint64_t i = 1; i <= N; ++i) {
    double x1 = 2.0 * radical_inverse(i, 2) - 1.0;
    double x2 = 2.0 * radical_inverse(i, 3) - 1.0;
    double x3 = 2.0 * radical_inverse(i, 5) - 1.0;
    total += cell(x1, x2, x3);
  }
  return total / static_cast<double>(N);
}

}  // namespace

double true_psi(const DgpSpec& spec) {
  if (spec.kind == DgpSpec::Kind::cate_rlearner) {
    if (spec.fix_x || spec.fix_a) {
      throw DomainError("true_psi for the frozen cate design is not defined");
    }
    double psi = 0.3 + 2.0 / 3.0;
    if (spec.local_perturbation) {
      // The fluctuation term contributes E[1/omega(X2)] / sqrt(n) to the
      // contrast, and E[2 + e^U + e^-U] over U ~ Uniform(-1,1) is 2+2sinh(1).
      psi += (2.0 + 2.0 * std::sinh(1.0)) / std::sqrt(static_cast<double>(spec.n));
    }
    return psi;
  }

  struct Key {
    int t0;
    double fx, fa;
    bool operator<(const Key& o) const {
      if (t0 != o.t0) return t0 < o.t0;
      if (fx != o.fx) return fx < o.fx;
      return fa < o.fa;
    }
  };
  static std::map<Key, double> cache;
  static std::mutex mu;
  Key key{spec.t0, spec.fix_x ? *spec.fix_x : -99.0, spec.fix_a ? *spec.fix_a : -99.0};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  double v = bg_true_psi(spec);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, v);
  return v;
}

MetricsRow aggregate_metrics(const std::string& estimator, std::size_t n, double truth,
                             const std::vector<ReplicateOutcome>& outcomes) {
  MetricsRow row;
  row.estimator = estimator;
  row.n = n;
  row.replicates = static_cast<int>(outcomes.size());
  row.true_psi = truth;

  double sum = 0.0;
  int good = 0, covered = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    ++good;
    sum += o.psi;
    if (o.lo <= truth && truth <= o.hi) ++covered;
  }
  row.failures = row.replicates - good;
  if (good > 0) {
    double mean = sum / good;
    row.bias = mean - truth;
    row.coverage = static_cast<double>(covered) / good;
    if (good > 1) {
      double ss = 0.0;
      for (const auto& o : outcomes)
        if (o.ok) ss += (o.psi - mean) * (o.psi - mean);
      row.se = std::sqrt(ss / (good - 1));
    }
  }
  return row;
}

namespace {

const char* problem_name_for(const DgpSpec& spec) {
  return spec.kind == DgpSpec::Kind::cate_rlearner ? "ate_rlearner" : "bg_survival";
}

std::vector<ReplicateOutcome> run_replicate(const SimConfig& cfg, const DgpSpec& spec,
                                            int replicate) {
  std::vector<ReplicateOutcome> out(cfg.estimators.size());
  const std::uint64_t seed_r = cfg.base_seed + static_cast<std::uint64_t>(replicate);
  Rng seeder(seed_r);
  const std::uint64_t data_seed = seeder.next_u64();
  const std::uint64_t fold_seed = seeder.next_u64();

  const std::size_t n = spec.n;
  const std::size_t n_gen = cfg.split_nuisance ? 2 * n : n;

  try {
    Dataset data = gen_dataset(spec, data_seed, n_gen);
    CrossFitPlan plan = make_folds(n, cfg.folds, fold_seed);

    EvalPlan ep;
    const EvalPlan* eval = nullptr;
    if (cfg.split_nuisance) {
      std::vector<std::size_t> held(n);
      for (std::size_t i = 0; i < n; ++i) held[i] = n + i;
      ep = eval_split(held, plan.J);
      eval = &ep;
    }

    ProblemOptions opts = cfg.problem;
    opts.t0 = spec.t0;
    ProblemSpec problem = make_problem(problem_name_for(spec), data, opts);

    bool have_fits = false;
    FoldFits fits;
    std::string fits_error;
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      const std::string& est = cfg.estimators[e];
      try {
        const FoldFits* fp = nullptr;
        if (estimator_needs_cross_fit(est)) {
          if (!have_fits) {
            if (!fits_error.empty()) throw Degenerate(fits_error);
            fits = cross_fit_nuisances(data, plan, problem);
            have_fits = true;
          }
          fp = &fits;
        }
        EstimateReport rep = run_with_fits(est, data, plan, problem, fp, cfg.level, eval);
        out[e] = {true, rep.psi_hat, rep.ci.lo, rep.ci.hi};
      } catch (const Error& err) {
        if (estimator_needs_cross_fit(est) && !have_fits && fits_error.empty()) {
          fits_error = err.what();  // every cross-fit estimator shares the failure
        }
        out[e] = {};
      }
    }
  } catch (const Error&) {
    for (auto& o : out) o = {};
  }
  return out;
}

}  // namespace

MetricsTable monte_carlo(const SimConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("simulation needs at least one replicate");
  if (cfg.grid.empty()) throw ConfigError("simulation grid is empty");
  if (cfg.estimators.empty()) throw ConfigError("simulation has no estimators");

  const std::size_t designs = cfg.grid.size();
  const std::size_t ests = cfg.estimators.size();
  const std::size_t R = static_cast<std::size_t>(cfg.replicates);

  // outcomes[d][e][r]; workers write disjoint (d, r) slices, so aggregation
  // in index order is identical no matter how the tasks were scheduled.
  std::vector<std::vector<std::vector<ReplicateOutcome>>> outcomes(
      designs, std::vector<std::vector<ReplicateOutcome>>(ests, std::vector<ReplicateOutcome>(R)));

  std::atomic<std::size_t> next{0};
  const std::size_t tasks = designs * R;
  auto worker = [&]() {
    for (;;) {
      std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      std::size_t d = task / R;
      int r = static_cast<int>(task % R);
      std::vector<ReplicateOutcome> res = run_replicate(cfg, cfg.grid[d], r);
      for (std::size_t e = 0; e < ests; ++e) outcomes[d][e][r] = res[e];
    }
  };

  int workers = std::max(1, cfg.workers);
  workers = static_cast<int>(std::min<std::size_t>(workers, tasks));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MetricsTable table;
  for (std::size_t d = 0; d < designs; ++d) {
    const double truth = true_psi(cfg.grid[d]);
    for (std::size_t e = 0; e < ests; ++e) {
      table.push_back(
          aggregate_metrics(cfg.estimators[e], cfg.grid[d].n, truth, outcomes[d][e]));
    }
  }
  return table;
}

std::string metrics_to_csv(const MetricsTable& table,
                           const std::vector<std::string>& config_comment) {
  std::string out;
  for (const auto& line : config_comment) out += "# " + line + "\n";
  out += "estimator,n,R,bias,se,coverage,failures,true_psi\n";
  char buf[256];
  for (const auto& row : table) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%d,%.17g,%.17g,%.17g,%d,%.17g\n",
                  row.estimator.c_str(), row.n, row.replicates, row.bias, row.se, row.coverage,
                  row.failures, row.true_psi);
    out += buf;
  }
  return out;
}

}  // namespace autodml
