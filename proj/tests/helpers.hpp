#pragma once

#include <string>
#include <vector>

#include "autodml/dataset.hpp"
#include "autodml/rng.hpp"

namespace testutil {

// Small synthetic table (x, a, y): x uniform, a Bernoulli(expit(x)),
// y = x + a(1 + x) + noise. Roles cover the treatment-effect problems.
inline autodml::Dataset make_xy_data(std::size_t n, std::uint64_t seed,
                                     double noise_sd = 0.5) {
  autodml::Rng rng(seed);
  Eigen::MatrixXd values(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    double pi = 1.0 / (1.0 + std::exp(-x));
    double a = rng.bernoulli(pi);
    double y = x + a * (1.0 + x) + rng.normal(0.0, noise_sd);
    values.row(i) << x, a, y;
  }
  autodml::Roles roles;
  roles.covariates = {"x"};
  roles.treatment = "a";
  roles.outcome = "y";
  return autodml::Dataset({"x", "a", "y"}, std::move(values), roles);
}

inline autodml::Obs obs_at(const autodml::Dataset& data, std::size_t row) {
  return autodml::Obs{&data, row};
}

}  // namespace testutil
