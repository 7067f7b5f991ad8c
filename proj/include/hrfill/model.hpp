#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hrfill/dataset.hpp"
#include "hrfill/features.hpp"
#include "hrfill/forest.hpp"
#include "hrfill/ridge.hpp"
#include "hrfill/svr.hpp"

namespace hrfill {

enum class ModelKind { baseline, ridge, svr, forest };

inline constexpr std::array<ModelKind, 4> kAllModelKinds = {ModelKind::baseline, ModelKind::ridge, ModelKind::svr,
                                                            ModelKind::forest};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Hyperparameters for every model kind; only the fields of `kind` matter.
struct ModelSpec {
  ModelKind kind = ModelKind::forest;
  // ridge
  double alpha = 1.0;
  // svr
  double c = 1.0;
  double epsilon = 0.1;
  std::optional<double> gamma;  // unset = 1 / (p * variance of the standardized features)
  double svr_tolerance = 1e-3;
  std::size_t svr_max_iterations = 10'000'000;
  // forest
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 5;
  bool bootstrap = true;
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 42;
  // baseline
  std::int64_t baseline_window_s = 1800;

  /// Throws UsageError naming the first out-of-range field.
  void validate() const;
  SvrParams svr_params() const;
  ForestParams forest_params() const;

  static ModelSpec defaults(ModelKind kind);
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct BaselineState {
  std::int64_t window_s = 1800;
};

using ModelState = std::variant<BaselineState, RidgeState, SvrState, ForestState>;

struct TrainedModel {
  ModelSpec spec;
  TargetKind target_kind = TargetKind::bpm;
  DeviationMode deviation = DeviationMode::all;
  std::vector<std::string> feature_names;
  ModelState state;

  /// One prediction per row of x (columns in feature_names order). Throws
  /// DataError on a column count mismatch and UsageError for the baseline,
  /// which predicts from the heart-rate timeline rather than from features.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  std::vector<double> predict(std::span<const FeatureRow> rows) const;
};

/// Validates the spec and fits the model to `data`.
TrainedModel fit_model(const ModelSpec& spec, const Dataset& data, TargetKind target_kind,
                       DeviationMode deviation = DeviationMode::all, std::size_t threads = 1);

inline constexpr int kModelFormatVersion = 1;

void save_model(const TrainedModel& model, std::ostream& out);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace hrfill
