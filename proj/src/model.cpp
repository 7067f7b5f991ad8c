#include "hrfill/model.hpp"

#include <fstream>
#include <json.hpp>
#include <string>

#include "hrfill/error.hpp"

namespace hrfill {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::baseline: return "baseline";
    case ModelKind::ridge: return "ridge";
    case ModelKind::svr: return "svr";
    case ModelKind::forest: return "forest";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto kind : kAllModelKinds) {
    if (text == to_string(kind)) return kind;
  }
  throw UsageError("unknown model kind '" + std::string(text) + "' (expected baseline, ridge, svr or forest)");
}

void ModelSpec::validate() const {
  if (!(alpha >= 0.0)) throw UsageError("model spec: alpha must be >= 0");
  if (!(c > 0.0)) throw UsageError("model spec: C must be > 0");
  if (!(epsilon >= 0.0)) throw UsageError("model spec: epsilon must be >= 0");
  if (gamma && !(*gamma > 0.0)) throw UsageError("model spec: gamma must be > 0");
  if (!(svr_tolerance > 0.0)) throw UsageError("model spec: svr tolerance must be > 0");
  if (svr_max_iterations < 1) throw UsageError("model spec: svr max_iterations must be >= 1");
  if (n_trees < 1) throw UsageError("model spec: n_trees must be >= 1");
  if (max_depth && *max_depth < 1) throw UsageError("model spec: max_depth must be >= 1 or unlimited");
  if (min_leaf < 1) throw UsageError("model spec: min_leaf must be >= 1");
  if (max_features && *max_features < 1) throw UsageError("model spec: max_features must be >= 1");
  if (baseline_window_s <= 0) throw UsageError("model spec: baseline window must be > 0 seconds");
}

SvrParams ModelSpec::svr_params() const {
  SvrParams p;
  p.c = c;
  p.epsilon = epsilon;
  p.gamma = gamma.value_or(1.0);
  p.tolerance = svr_tolerance;
  p.max_iterations = svr_max_iterations;
  return p;
}

ForestParams ModelSpec::forest_params() const {
  ForestParams p;
  p.n_trees = n_trees;
  p.max_depth = max_depth;
  p.min_leaf = min_leaf;
  p.bootstrap = bootstrap;
  p.seed = seed;
  p.max_features = max_features;
  return p;
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  return spec;
}

Eigen::VectorXd TrainedModel::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
    throw DataError("model expects " + std::to_string(feature_names.size()) + " features, got " +
                    std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& s) -> Eigen::VectorXd {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BaselineState>) {
          throw UsageError("the baseline predicts from the heart-rate timeline, not from feature rows");
        } else if constexpr (std::is_same_v<S, RidgeState>) {
          return ridge_predict(s, x);
        } else if constexpr (std::is_same_v<S, SvrState>) {
          return svr_predict(s, x);
        } else {
          return forest_predict(s, x);
        }
      },
      state);
}

std::vector<double> TrainedModel::predict(std::span<const FeatureRow> rows) const {
  if (feature_names != hrfill::feature_names()) {
    throw DataError("model was trained on a different feature schema than the standard feature rows");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = rows[i].values();
    for (std::size_t j = 0; j < kFeatureCount; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  if (rows.empty()) {
    if (std::holds_alternative<BaselineState>(state)) predict(x);  // same error as the non-empty case
    return {};
  }
  const Eigen::VectorXd out = predict(x);
  return {out.data(), out.data() + out.size()};
}

TrainedModel fit_model(const ModelSpec& spec, const Dataset& data, TargetKind target_kind, DeviationMode deviation,
                       std::size_t threads) {
  spec.validate();
  TrainedModel model;
  model.spec = spec;
  model.target_kind = target_kind;
  model.deviation = deviation;
  model.feature_names = data.feature_names;
  if (model.feature_names.empty()) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) model.feature_names.push_back("f" + std::to_string(j));
  }
  if (static_cast<std::size_t>(data.x.cols()) != model.feature_names.size()) {
    throw UsageError("dataset has " + std::to_string(data.x.cols()) + " columns but " +
                     std::to_string(model.feature_names.size()) + " feature names");
  }
  switch (spec.kind) {
    case ModelKind::baseline:
      model.state = BaselineState{spec.baseline_window_s};
      break;
    case ModelKind::ridge:
      model.state = ridge_solve(data, spec.alpha);
      break;
    case ModelKind::svr:
      model.state = svr_train(data, spec.svr_params(), !spec.gamma.has_value());
      break;
    case ModelKind::forest:
      model.state = forest_train(data, spec.forest_params(), threads);
      break;
  }
  return model;
}

// ---- serialization -------------------------------------------------------

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json standardizer_to_json(const Standardizer& s) { return {{"mean", vec_to_json(s.mean)}, {"scale", vec_to_json(s.scale)}}; }

Standardizer standardizer_from_json(const json& j) {
  Standardizer s;
  s.mean = vec_from_json(j.at("mean"));
  s.scale = vec_from_json(j.at("scale"));
  return s;
}

json optional_to_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

json spec_to_json(const ModelSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"alpha", s.alpha},
          {"c", s.c},
          {"epsilon", s.epsilon},
          {"gamma", s.gamma ? json(*s.gamma) : json(nullptr)},
          {"svr_tolerance", s.svr_tolerance},
          {"svr_max_iterations", s.svr_max_iterations},
          {"n_trees", s.n_trees},
          {"max_depth", optional_to_json(s.max_depth)},
          {"min_leaf", s.min_leaf},
          {"bootstrap", s.bootstrap},
          {"max_features", optional_to_json(s.max_features)},
          {"seed", s.seed},
          {"baseline_window_s", s.baseline_window_s}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.alpha = j.at("alpha").get<double>();
  s.c = j.at("c").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  if (!j.at("gamma").is_null()) s.gamma = j.at("gamma").get<double>();
  s.svr_tolerance = j.at("svr_tolerance").get<double>();
  s.svr_max_iterations = j.at("svr_max_iterations").get<std::size_t>();
  s.n_trees = j.at("n_trees").get<std::size_t>();
  s.max_depth = optional_from_json(j.at("max_depth"));
  s.min_leaf = j.at("min_leaf").get<std::size_t>();
  s.bootstrap = j.at("bootstrap").get<bool>();
  s.max_features = optional_from_json(j.at("max_features"));
  s.seed = j.at("seed").get<std::uint64_t>();
  s.baseline_window_s = j.at("baseline_window_s").get<std::int64_t>();
  return s;
}

// Trees are stored column-wise: one array per node field.
json tree_to_json(const RegressionTree& tree) {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold, value, weight, gain;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
    weight.push_back(n.weight);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},  {"right", right},
          {"value", value},     {"weight", weight},       {"gain", gain}};
}

RegressionTree tree_from_json(const json& j, std::size_t n_features) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto weight = j.at("weight").get<std::vector<double>>();
  const auto gain = j.at("gain").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || left.size() != n || right.size() != n || threshold.size() != n || value.size() != n ||
      weight.size() != n || gain.size() != n) {
    throw DataError("model file: inconsistent tree arrays");
  }
  RegressionTree tree;
  tree.nodes.resize(n);
  const auto limit = static_cast<std::int32_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = tree.nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i], weight[i], gain[i]};
    if (node.is_leaf()) continue;
    // Children always come after their parent, which also rules out cycles.
    if (node.feature >= static_cast<std::int32_t>(n_features) || node.left <= static_cast<std::int32_t>(i) ||
        node.right <= static_cast<std::int32_t>(i) || node.left >= limit || node.right >= limit) {
      throw DataError("model file: malformed tree node " + std::to_string(i));
    }
  }
  return tree;
}

json state_to_json(const ModelState& state) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BaselineState>) {
          return {{"window_s", s.window_s}};
        } else if constexpr (std::is_same_v<S, RidgeState>) {
          return {{"intercept", s.intercept}, {"coefficients", vec_to_json(s.coefficients)},
                  {"scaling", standardizer_to_json(s.scaling)}};
        } else if constexpr (std::is_same_v<S, SvrState>) {
          json rows = json::array();
          for (Eigen::Index r = 0; r < s.support_vectors.rows(); ++r) {
            rows.push_back(vec_to_json(s.support_vectors.row(r).transpose()));
          }
          return {{"support_vectors", rows},    {"dual_coef", vec_to_json(s.dual_coef)},
                  {"bias", s.bias},             {"gamma", s.gamma},
                  {"scaling", standardizer_to_json(s.scaling)}, {"iterations", s.iterations},
                  {"kkt_gap", s.kkt_gap}};
        } else {
          json trees = json::array();
          for (const auto& t : s.trees) trees.push_back(tree_to_json(t));
          return {{"n_features", s.n_features}, {"trees", trees}, {"oob_rows", s.oob_rows}};
        }
      },
      state);
}

ModelState state_from_json(ModelKind kind, const json& j, std::size_t n_features) {
  switch (kind) {
    case ModelKind::baseline:
      return BaselineState{j.at("window_s").get<std::int64_t>()};
    case ModelKind::ridge: {
      RidgeState s;
      s.intercept = j.at("intercept").get<double>();
      s.coefficients = vec_from_json(j.at("coefficients"));
      s.scaling = standardizer_from_json(j.at("scaling"));
      if (static_cast<std::size_t>(s.coefficients.size()) != n_features ||
          static_cast<std::size_t>(s.scaling.mean.size()) != n_features ||
          static_cast<std::size_t>(s.scaling.scale.size()) != n_features) {
        throw DataError("model file: ridge state does not match the feature count");
      }
      return s;
    }
    case ModelKind::svr: {
      SvrState s;
      const auto& rows = j.at("support_vectors");
      s.dual_coef = vec_from_json(j.at("dual_coef"));
      if (rows.size() != static_cast<std::size_t>(s.dual_coef.size())) {
        throw DataError("model file: support vector and dual coefficient counts differ");
      }
      s.support_vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_features));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto v = vec_from_json(rows[r]);
        if (static_cast<std::size_t>(v.size()) != n_features) throw DataError("model file: bad support vector width");
        s.support_vectors.row(static_cast<Eigen::Index>(r)) = v.transpose();
      }
      s.bias = j.at("bias").get<double>();
      s.gamma = j.at("gamma").get<double>();
      s.scaling = standardizer_from_json(j.at("scaling"));
      s.iterations = j.at("iterations").get<std::size_t>();
      s.kkt_gap = j.at("kkt_gap").get<double>();
      if (static_cast<std::size_t>(s.scaling.mean.size()) != n_features) {
        throw DataError("model file: svr scaling does not match the feature count");
      }
      return s;
    }
    case ModelKind::forest: {
      ForestState s;
      s.n_features = j.at("n_features").get<std::size_t>();
      if (s.n_features != n_features) throw DataError("model file: forest feature count mismatch");
      for (const auto& t : j.at("trees")) s.trees.push_back(tree_from_json(t, n_features));
      s.oob_rows = j.at("oob_rows").get<std::vector<std::vector<std::uint32_t>>>();
      if (s.trees.empty() || s.oob_rows.size() != s.trees.size()) {
        throw DataError("model file: forest has no trees or mismatched out-of-bag sets");
      }
      return s;
    }
  }
  throw DataError("model file: unknown model kind");
}

}  // namespace

void save_model(const TrainedModel& model, std::ostream& out) {
  json j = {{"format", "hrfill-model"},
            {"version", kModelFormatVersion},
            {"spec", spec_to_json(model.spec)},
            {"target_kind", to_string(model.target_kind)},
            {"deviation_mode", to_string(model.deviation)},
            {"feature_names", model.feature_names},
            {"state", state_to_json(model.state)}};
  out << j.dump() << '\n';
  if (!out) throw DataError("failed to write model");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

TrainedModel load_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "hrfill-model") throw DataError("not an hrfill model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format version " + std::to_string(version));
    }
    TrainedModel model;
    model.spec = spec_from_json(j.at("spec"));
    model.target_kind = parse_target_kind(j.at("target_kind").get<std::string>());
    model.deviation = parse_deviation_mode(j.at("deviation_mode").get<std::string>());
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.state = state_from_json(model.spec.kind, j.at("state"), model.feature_names.size());
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is malformed: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("model file is malformed: ") + e.what());
  }
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace hrfill
