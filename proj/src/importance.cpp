#include "hrfill/importance.hpp"

#include <cmath>
#include <numeric>

#include "hrfill/error.hpp"
#include "hrfill/parallel.hpp"
#include "hrfill/random.hpp"

namespace hrfill {

std::vector<double> importance_split_gain(const ForestState& forest) {
  std::vector<double> gain(forest.n_features, 0.0);
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) gain[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  if (total > 0.0) {
    for (auto& g : gain) g /= total;
  }
  return gain;
}

PermutationImportance importance_permutation_oob(const ForestState& forest, const Dataset& data,
                                                 std::uint64_t seed, std::size_t threads) {
  const std::size_t p = forest.n_features;
  if (data.cols() != p) throw DataError("importance: dataset feature count does not match the forest");
  const std::size_t n_trees = forest.trees.size();

  // deltas[t * p + f]; NaN for trees without OOB rows.
  std::vector<double> deltas(n_trees * p, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_trees, threads, [&](std::size_t t) {
    const auto& oob = forest.oob_rows[t];
    if (oob.empty()) return;
    const auto& tree = forest.trees[t];
    for (auto r : oob) {
      if (r >= data.rows()) throw DataError("importance: OOB index outside the dataset");
    }

    double base = 0.0;
    for (auto r : oob) {
      const double e = tree.predict_row(data.x, r) - data.y(r);
      base += e * e;
    }
    base /= static_cast<double>(oob.size());

    std::vector<std::uint32_t> donors(oob);
    for (std::size_t f = 0; f < p; ++f) {
      std::iota(donors.begin(), donors.end(), 0U);
      Rng rng(mix_seed(seed, t, f));
      shuffle(std::span<std::uint32_t>(donors), rng);
      double permuted = 0.0;
      for (std::size_t k = 0; k < oob.size(); ++k) {
        const auto r = oob[k];
        const auto donor = oob[donors[k]];
        const double v = tree.predict([&](std::int32_t feature) {
          return static_cast<std::size_t>(feature) == f ? data.x(donor, feature) : data.x(r, feature);
        });
        const double e = v - data.y(r);
        permuted += e * e;
      }
      permuted /= static_cast<double>(oob.size());
      deltas[t * p + f] = permuted - base;
    }
  });

  PermutationImportance out;
  out.raw.assign(p, 0.0);
  out.spread.assign(p, 0.0);
  for (std::size_t t = 0; t < n_trees; ++t) {
    if (std::isnan(deltas[t * p])) continue;
    ++out.trees_used;
    for (std::size_t f = 0; f < p; ++f) out.raw[f] += deltas[t * p + f];
  }
  if (out.trees_used == 0) {
    throw DataError("importance: every tree has an empty out-of-bag set (bootstrap disabled?)");
  }
  const auto used = static_cast<double>(out.trees_used);
  for (auto& v : out.raw) v /= used;
  for (std::size_t t = 0; t < n_trees; ++t) {
    if (std::isnan(deltas[t * p])) continue;
    for (std::size_t f = 0; f < p; ++f) {
      const double d = deltas[t * p + f] - out.raw[f];
      out.spread[f] += d * d;
    }
  }
  for (auto& s : out.spread) s = out.trees_used > 1 ? std::sqrt(s / (used - 1.0)) : 0.0;
  out.clamped = out.raw;
  for (auto& v : out.clamped) v = std::max(0.0, v);
  return out;
}

ImportanceTable importance_table(const ForestState& forest, const Dataset& data, std::uint64_t seed,
                                 std::size_t threads) {
  ImportanceTable table;
  table.features = data.feature_names;
  table.split_gain = importance_split_gain(forest);
  auto perm = importance_permutation_oob(forest, data, seed, threads);
  table.permutation = std::move(perm.clamped);
  table.permutation_raw = std::move(perm.raw);
  table.permutation_spread = std::move(perm.spread);
  return table;
}

ImportanceTable average_importance(const std::vector<ImportanceTable>& tables) {
  if (tables.empty()) return {};
  ImportanceTable mean;
  mean.features = tables.front().features;
  const std::size_t p = mean.features.size();
  mean.split_gain.assign(p, 0.0);
  mean.permutation.assign(p, 0.0);
  mean.permutation_raw.assign(p, 0.0);
  mean.permutation_spread.assign(p, 0.0);
  for (const auto& t : tables) {
    if (t.features != mean.features) throw UsageError("importance: cannot average tables over different features");
    for (std::size_t f = 0; f < p; ++f) {
      mean.split_gain[f] += t.split_gain[f];
      mean.permutation[f] += t.permutation[f];
      mean.permutation_raw[f] += t.permutation_raw[f];
      mean.permutation_spread[f] += t.permutation_spread[f];
    }
  }
  const auto k = static_cast<double>(tables.size());
  for (std::size_t f = 0; f < p; ++f) {
    mean.split_gain[f] /= k;
    mean.permutation[f] /= k;
    mean.permutation_raw[f] /= k;
    mean.permutation_spread[f] /= k;
  }
  return mean;
}

}  // namespace hrfill
