#include "autodml/folds.hpp"

#include <algorithm>
#include <map>

#include "autodml/rng.hpp"

namespace autodml {

namespace {

void check_fold_count(std::size_t n, int J) {
  if (J < 2 || static_cast<std::size_t>(J) > n) {
    throw InvalidFoldCount("fold count must satisfy 2 <= J <= n; got J=" +
                           std::to_string(J) + " with n=" + std::to_string(n));
  }
}

std::vector<std::size_t> shuffled_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

CrossFitPlan finalize(std::size_t n, int J, std::uint64_t seed, std::vector<int> assignment) {
  CrossFitPlan plan;
  plan.J = J;
  plan.seed = seed;
  plan.assignment = std::move(assignment);
  plan.folds.assign(J, {});
  for (std::size_t i = 0; i < n; ++i) plan.folds[plan.assignment[i]].push_back(i);
  return plan;  // each folds[j] is increasing because rows are visited in order
}

}  // namespace

std::vector<std::size_t> CrossFitPlan::complement(int j) const {
  std::vector<std::size_t> rows;
  rows.reserve(n() - folds[j].size());
  for (std::size_t i = 0; i < n(); ++i)
    if (assignment[i] != j) rows.push_back(i);
  return rows;
}

CrossFitPlan make_folds(std::size_t n, int J, std::uint64_t seed) {
  check_fold_count(n, J);
  Rng rng(seed);
  std::vector<std::size_t> perm = shuffled_rows(n, rng);
  std::vector<int> assignment(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    assignment[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(J));
  return finalize(n, J, seed, std::move(assignment));
}

CrossFitPlan make_folds_stratified(std::size_t n, int J, std::uint64_t seed,
                                   const std::vector<int>& labels) {
  check_fold_count(n, J);
  if (labels.size() != n) {
    throw DimensionMismatch("labels has " + std::to_string(labels.size()) +
                            " entries; expected " + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<std::size_t> perm = shuffled_rows(n, rng);

  // Group the shuffled order by label (labels visited in sorted order), then
  // keep dealing round-robin with one rolling fold cursor. Each label's rows
  // land on consecutive folds, so per-label counts differ by at most one, and
  // the rolling cursor keeps overall fold sizes balanced too.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t pos = 0; pos < n; ++pos) groups[labels[perm[pos]]].push_back(perm[pos]);

  std::vector<int> assignment(n);
  std::size_t cursor = 0;
  for (const auto& [label, rows] : groups) {
    (void)label;
    for (std::size_t r : rows) assignment[r] = static_cast<int>(cursor++ % static_cast<std::size_t>(J));
  }
  return finalize(n, J, seed, std::move(assignment));
}

}  // namespace autodml
