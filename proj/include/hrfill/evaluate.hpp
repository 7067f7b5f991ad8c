#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrfill/baseline.hpp"
#include "hrfill/features.hpp"
#include "hrfill/importance.hpp"
#include "hrfill/model.hpp"

namespace hrfill {

/// 1 - SS_res / SS_tot. Throws DataError on a length mismatch, fewer than two
/// values, or constant `actual` (R^2 undefined).
double r_squared(std::span<const double> actual, std::span<const double> predicted);

/// Root mean squared error. Throws DataError on a length mismatch or empty
/// input.
double rmse(std::span<const double> actual, std::span<const double> predicted);

enum class FoldPolicy { shuffled, blocked };

std::string_view to_string(FoldPolicy policy);
FoldPolicy parse_fold_policy(std::string_view text);

struct FoldAssignment {
  std::vector<std::uint32_t> fold_of_row;
  std::size_t k = 5;
  FoldPolicy policy = FoldPolicy::shuffled;
  std::uint64_t seed = 0;

  /// Ascending row indices in / not in `fold`.
  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// `shuffled`: a seeded random permutation cut into k chunks; `blocked`: k
/// contiguous chunks in row order. Chunk sizes differ by at most one.
/// Throws UsageError if k < 2 or n_rows < k.
FoldAssignment kfold_split(std::size_t n_rows, std::size_t k, FoldPolicy policy, std::uint64_t seed);

/// Ascending positions of a seeded random subset of at most `cap` of n rows
/// (all rows when n <= cap or cap == 0).
std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t cap, std::uint64_t seed);

/// One participant ready for evaluation: complete-case feature rows with a
/// bpm target, and the full 1 Hz heart-rate timeline for the baseline.
struct ParticipantData {
  std::string participant_id;
  FeatureMatrix features;
  HrSeries hr;
};

/// Builds features every `stride_s` seconds (see build_feature_matrix).
ParticipantData prepare_participant(const AlignedStream& stream, const FeatureOptions& options,
                                    std::int64_t stride_s);

struct CvConfig {
  std::size_t folds = 5;
  FoldPolicy policy = FoldPolicy::shuffled;
  std::uint64_t seed = 42;
  std::size_t svr_max_rows = 2000;  // SVR trains on a seeded subsample of at most this many rows
  bool importance = true;
  bool traces = true;
  std::size_t threads = 1;
  DeviationMode deviation = DeviationMode::all;  // recorded in the report; must match the feature rows
};

enum class EvalMode { personalized, generalized };

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view text);

struct FoldMetric {
  std::string participant_id;  // empty for pooled generalized entries
  ModelKind model = ModelKind::forest;
  std::size_t fold = 0;
  std::size_t n_test = 0;
  double r_squared = 0.0;
  double rmse = 0.0;      // in target units
  double rmse_bpm = 0.0;  // after inverting z-scores per participant; equals rmse for bpm targets
  friend bool operator==(const FoldMetric&, const FoldMetric&) = default;
};

/// Means over the participant's folds.
struct ParticipantMetric {
  std::string participant_id;
  ModelKind model = ModelKind::forest;
  std::size_t folds = 0;
  double r_squared = 0.0;
  double rmse = 0.0;
  double rmse_bpm = 0.0;
  friend bool operator==(const ParticipantMetric&, const ParticipantMetric&) = default;
};

/// Means over participants.
struct ModelSummary {
  ModelKind model = ModelKind::forest;
  std::size_t participants = 0;
  double r_squared = 0.0;
  double rmse = 0.0;
  double rmse_bpm = 0.0;
  friend bool operator==(const ModelSummary&, const ModelSummary&) = default;
};

struct TraceRow {
  std::int64_t timestamp_s = 0;
  double actual_bpm = 0.0;
  double predicted_bpm = 0.0;
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Out-of-fold predictions for one participant and model, in time order.
struct PredictionTrace {
  std::string participant_id;
  ModelKind model = ModelKind::forest;
  std::vector<TraceRow> rows;
};

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationReport {
  EvalMode mode = EvalMode::personalized;
  TargetKind target_kind = TargetKind::bpm;
  std::vector<ModelSpec> specs;
  std::size_t folds = 5;
  FoldPolicy policy = FoldPolicy::shuffled;
  std::uint64_t seed = 42;
  std::int64_t stride_s = 1;
  std::size_t svr_max_rows = 0;
  DeviationMode deviation = DeviationMode::all;
  std::int64_t data_start_s = 0;  // earliest and latest feature-row timestamps
  std::int64_t data_end_s = 0;
  std::vector<std::string> participants;
  std::vector<FoldMetric> fold_metrics;         // per (participant, model, fold)
  std::vector<FoldMetric> pooled_fold_metrics;  // generalized: all test rows of a fold together
  std::vector<ParticipantMetric> participant_metrics;
  std::vector<ModelSummary> summary;
  std::optional<ImportanceTable> importance;
  std::vector<std::string> warnings;
  std::vector<PredictionTrace> traces;  // exported as separate CSV files

  /// Throws UsageError if the model was not evaluated.
  const ModelSummary& summary_for(ModelKind model) const;
};

/// Fills participant_metrics and summary from fold_metrics: arithmetic means
/// in fold order, then in participant order.
void aggregate(EvaluationReport& report);

/// Per-participant k-fold CV with bpm targets. In every fold the baseline
/// sees the heart-rate timeline with the test seconds removed, and all models
/// are scored on the test seconds the baseline covers.
EvaluationReport run_personalized(std::span<const ParticipantData> participants, std::span<const ModelSpec> specs,
                                  const CvConfig& cv);

/// Pooled k-fold CV with z-scored targets. Each participant's rows are split
/// into k folds and fold f pools every participant's fold f, so everyone
/// contributes to every fold. Z-score parameters come from the participant's
/// training rows in that fold. Requires at least two participants.
EvaluationReport run_generalized(std::span<const ParticipantData> participants, std::span<const ModelSpec> specs,
                                 const CvConfig& cv);

/// Writes report.json, metrics.csv, summary.txt and traces/<participant>_<model>.csv
/// into `dir`.
void export_report(const EvaluationReport& report, const std::filesystem::path& dir);
void write_report_json(const EvaluationReport& report, std::ostream& out);
void write_metrics_csv(const EvaluationReport& report, std::ostream& out);
/// Human-readable table: one row per model, R^2 and RMSE columns.
void write_summary(const EvaluationReport& report, std::ostream& out);
EvaluationReport load_report(std::istream& in);
EvaluationReport load_report(const std::filesystem::path& path);

inline constexpr std::string_view kTraceHeader = "timestamp_s,actual_bpm,predicted_bpm";

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

/// Predictions of `model` for every frame with heart rate and complete phone
/// features (for the baseline: every frame with heart rate that the baseline
/// covers). Z-score outputs are inverted with `zscore`, which is then
/// required.
std::vector<TraceRow> prediction_trace(const TrainedModel& model, const AlignedStream& stream, int tz_offset_min,
                                       const std::optional<ZScoreParams>& zscore);
void export_prediction_trace(const TrainedModel& model, const AlignedStream& stream, int tz_offset_min,
                             const std::optional<ZScoreParams>& zscore, const std::filesystem::path& path);

}  // namespace hrfill
