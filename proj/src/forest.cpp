#include "hrfill/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hrfill/error.hpp"
#include "hrfill/parallel.hpp"
#include "hrfill/random.hpp"

namespace hrfill {

namespace {

struct Sample {
  double x;
  double y;  // centered on the node mean
  double w;
};

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& params,
             std::size_t max_features, Rng& rng)
      : x_(x), y_(y), params_(params), max_features_(max_features), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionTree grow(std::vector<std::uint32_t> rows, std::vector<double> weights) {
    rows_ = std::move(rows);
    weights_ = std::move(weights);
    RegressionTree tree;
    tree.nodes.emplace_back();

    struct Task {
      std::size_t begin;
      std::size_t end;
      std::size_t depth;
      std::int32_t node;
    };
    std::vector<Task> stack{{0, rows_.size(), 0, 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();

      double w_sum = 0.0;
      double wy_sum = 0.0;
      double y_min = std::numeric_limits<double>::infinity();
      double y_max = -y_min;
      for (std::size_t k = task.begin; k < task.end; ++k) {
        const auto r = rows_[k];
        const double w = weights_[r];
        w_sum += w;
        wy_sum += w * y_(r);
        y_min = std::min(y_min, y_(r));
        y_max = std::max(y_max, y_(r));
      }
      const double mean = std::clamp(wy_sum / w_sum, y_min, y_max);
      auto& node = tree.nodes[static_cast<std::size_t>(task.node)];
      node.value = mean;
      node.weight = w_sum;

      const bool depth_reached = params_.max_depth && task.depth >= *params_.max_depth;
      const auto min_leaf = static_cast<double>(params_.min_leaf);
      if (depth_reached || w_sum < 2.0 * min_leaf || y_min == y_max) continue;

      const Split split = best_split(task.begin, task.end, mean, w_sum);
      if (split.feature < 0) continue;

      const auto mid_it = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                         rows_.begin() + static_cast<std::ptrdiff_t>(task.end),
                                         [&](std::uint32_t r) { return x_(r, split.feature) <= split.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& parent = tree.nodes[static_cast<std::size_t>(task.node)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.gain = split.gain;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({mid, task.end, task.depth + 1, left + 1});
      stack.push_back({task.begin, mid, task.depth + 1, left});
    }
    return tree;
  }

 private:
  // Visits features in random order until max_features non-constant ones
  // have been evaluated; constant features do not count toward the budget.
  Split best_split(std::size_t begin, std::size_t end, double mean, double w_sum) {
    Split best;
    double best_score = -std::numeric_limits<double>::infinity();
    double node_sse = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto r = rows_[k];
      const double d = y_(r) - mean;
      node_sse += weights_[r] * d * d;
    }
    if (!(node_sse > 0.0)) return best;
    const auto min_leaf = static_cast<double>(params_.min_leaf);

    std::size_t evaluated = 0;
    const std::size_t p = features_.size();
    for (std::size_t k = 0; k < p && evaluated < max_features_; ++k) {
      const auto pick = k + static_cast<std::size_t>(uniform_below(rng_, p - k));
      std::swap(features_[k], features_[pick]);
      const auto f = static_cast<Eigen::Index>(features_[k]);

      buffer_.clear();
      double x_min = std::numeric_limits<double>::infinity();
      double x_max = -x_min;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        const double v = x_(r, f);
        x_min = std::min(x_min, v);
        x_max = std::max(x_max, v);
        buffer_.push_back({v, y_(r) - mean, weights_[r]});
      }
      if (x_min == x_max) continue;
      ++evaluated;

      std::sort(buffer_.begin(), buffer_.end(), [](const Sample& a, const Sample& b) { return a.x < b.x; });
      double s_total = 0.0;
      for (const auto& s : buffer_) s_total += s.w * s.y;

      double w_left = 0.0;
      double s_left = 0.0;
      for (std::size_t i = 0; i + 1 < buffer_.size(); ++i) {
        w_left += buffer_[i].w;
        s_left += buffer_[i].w * buffer_[i].y;
        if (buffer_[i].x == buffer_[i + 1].x) continue;
        const double w_right = w_sum - w_left;
        if (w_left < min_leaf || w_right < min_leaf) continue;
        const double s_right = s_total - s_left;
        const double score = s_left * s_left / w_left + s_right * s_right / w_right;
        if (score > best_score) {
          best_score = score;
          const double a = buffer_[i].x;
          const double b = buffer_[i + 1].x;
          double t = a + (b - a) * 0.5;
          if (!(t < b)) t = a;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = t;
          best.gain = score - s_total * s_total / w_sum;
        }
      }
    }
    // Reject splits whose gain is indistinguishable from rounding noise.
    if (best.feature >= 0 && !(best.gain > 1e-12 * node_sse)) best = Split{};
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const ForestParams& params_;
  std::size_t max_features_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> rows_;
  std::vector<double> weights_;
  std::vector<Sample> buffer_;
};

}  // namespace

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t default_max_features(std::size_t p) { return std::max<std::size_t>(1, (p + 2) / 3); }

ForestState forest_train(const Dataset& data, const ForestParams& params, std::size_t threads) {
  if (params.n_trees < 1) throw UsageError("forest: n_trees must be >= 1");
  if (params.min_leaf < 1) throw UsageError("forest: min_leaf must be >= 1");
  if (params.max_depth && *params.max_depth < 1) throw UsageError("forest: max_depth must be >= 1");
  const std::size_t n = data.rows();
  if (n < 2 * params.min_leaf) {
    throw DataError("forest: need at least " + std::to_string(2 * params.min_leaf) + " rows (2 x min_leaf), got " +
                    std::to_string(n));
  }
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DataError("forest: too many rows");
  const std::size_t p = data.cols();
  const std::size_t max_features = std::min(p, params.max_features.value_or(default_max_features(p)));

  ForestState forest;
  forest.n_features = p;
  forest.trees.resize(params.n_trees);
  forest.oob_rows.resize(params.n_trees);

  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, t));
    std::vector<double> weights(n, 1.0);
    std::vector<std::uint32_t> rows;
    std::vector<std::uint32_t> oob;
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) weights[static_cast<std::size_t>(uniform_below(rng, n))] += 1.0;
      for (std::size_t r = 0; r < n; ++r) {
        (weights[r] > 0.0 ? rows : oob).push_back(static_cast<std::uint32_t>(r));
      }
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0U);
    }
    TreeGrower grower(data.x, data.y, params, max_features, rng);
    forest.trees[t] = grower.grow(std::move(rows), std::move(weights));
    forest.oob_rows[t] = std::move(oob);
  });
  return forest;
}

Eigen::VectorXd forest_predict(const ForestState& forest, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != forest.n_features) {
    throw DataError("forest: expected " + std::to_string(forest.n_features) + " features, got " +
                    std::to_string(x.cols()));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (const auto& tree : forest.trees) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) += tree.predict_row(x, r);
  }
  return out / static_cast<double>(forest.trees.size());
}

}  // namespace hrfill
