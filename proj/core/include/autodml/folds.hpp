#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "autodml/errors.hpp"

namespace autodml {

// A disjoint partition of rows 0..n-1 into J folds. assignment[i] is the fold
// holding row i; folds[j] lists fold j's rows in increasing order. Sizes
// differ by at most one.
struct CrossFitPlan {
  int J = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignment;
  std::vector<std::vector<std::size_t>> folds;

  std::size_t n() const { return assignment.size(); }
  // Rows outside fold j, in increasing order: the training set for fold j.
  std::vector<std::size_t> complement(int j) const;
};

// Fisher-Yates shuffle of 0..n-1 driven by the library RNG, then round-robin
// assignment of the shuffled order to folds. Deterministic in (n, J, seed).
// Requires 2 <= J <= n.
CrossFitPlan make_folds(std::size_t n, int J, std::uint64_t seed);

// Same contract, but rows sharing a label are spread across folds so that
// per-fold label counts differ by at most one for every label.
CrossFitPlan make_folds_stratified(std::size_t n, int J, std::uint64_t seed,
                                   const std::vector<int>& labels);

}  // namespace autodml
