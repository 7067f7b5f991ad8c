#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "hrfill/dataset.hpp"

namespace hrfill {

/// Flat CART node. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;      // weighted mean target of the node's training rows
  double weight = 0.0;     // training rows reaching the node, bootstrap multiplicity included
  double gain = 0.0;       // weighted SSE reduction of the split; 0 for leaves

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& row) const {
    std::int32_t at = 0;
    while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(at)];
      at = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }

  double predict_row(const Eigen::MatrixXd& x, Eigen::Index r) const {
    return predict([&](std::int32_t f) { return x(r, f); });
  }

  std::size_t depth() const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;   // unset = grow until leaves are pure or too small
  std::size_t min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 42;
  std::optional<std::size_t> max_features;  // unset = ceil(p / 3)
};

struct ForestState {
  std::vector<RegressionTree> trees;
  std::vector<std::vector<std::uint32_t>> oob_rows;  // per tree, ascending training-row indices
  std::size_t n_features = 0;
  friend bool operator==(const ForestState&, const ForestState&) = default;
};

/// Features tried per split for p columns under the default rule.
std::size_t default_max_features(std::size_t p);

/// Grows one regression tree per bootstrap sample. Tree t draws everything
/// from an RNG seeded by (seed, t), so the result does not depend on
/// `threads`.
ForestState forest_train(const Dataset& data, const ForestParams& params, std::size_t threads = 1);

/// Mean of the per-tree predictions, accumulated in tree order.
Eigen::VectorXd forest_predict(const ForestState& forest, const Eigen::MatrixXd& x);

}  // namespace hrfill
