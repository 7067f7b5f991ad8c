#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrfill/dataset.hpp"
#include "hrfill/forest.hpp"

namespace hrfill {

/// Per-feature summed split gain, normalized to sum to 1 (all zeros when the
/// forest has no splits).
std::vector<double> importance_split_gain(const ForestState& forest);

struct PermutationImportance {
  std::vector<double> raw;      // mean over trees of (permuted OOB MSE - OOB MSE)
  std::vector<double> clamped;  // raw with negatives set to 0
  std::vector<double> spread;   // standard deviation of the per-tree differences
  std::size_t trees_used = 0;   // trees with a non-empty OOB set
};

/// Out-of-bag permutation importance. `data` must be the training data the
/// forest was grown on (OOB indices refer to its rows). Each (tree, feature)
/// permutation uses its own RNG stream derived from `seed`. Throws
/// DataError when every OOB set is empty.
PermutationImportance importance_permutation_oob(const ForestState& forest, const Dataset& data,
                                                 std::uint64_t seed, std::size_t threads = 1);

struct ImportanceTable {
  std::vector<std::string> features;
  std::vector<double> split_gain;
  std::vector<double> permutation;      // clamped at 0
  std::vector<double> permutation_raw;
  std::vector<double> permutation_spread;
};

ImportanceTable importance_table(const ForestState& forest, const Dataset& data, std::uint64_t seed,
                                 std::size_t threads = 1);

/// Element-wise mean of several tables over the same features.
ImportanceTable average_importance(const std::vector<ImportanceTable>& tables);

}  // namespace hrfill
