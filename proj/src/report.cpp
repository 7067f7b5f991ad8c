#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"
#include "hrfill/evaluate.hpp"

namespace hrfill {

using nlohmann::json;

namespace {

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json spec_json(const ModelSpec& s) {
  json j = {{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case ModelKind::baseline: j["window_s"] = s.baseline_window_s; break;
    case ModelKind::ridge: j["alpha"] = s.alpha; break;
    case ModelKind::svr:
      j["c"] = s.c;
      j["epsilon"] = s.epsilon;
      j["gamma"] = s.gamma ? json(*s.gamma) : json(nullptr);
      j["tolerance"] = s.svr_tolerance;
      j["max_iterations"] = s.svr_max_iterations;
      break;
    case ModelKind::forest:
      j["n_trees"] = s.n_trees;
      j["max_depth"] = optional_size(s.max_depth);
      j["min_leaf"] = s.min_leaf;
      j["bootstrap"] = s.bootstrap;
      j["max_features"] = optional_size(s.max_features);
      j["seed"] = s.seed;
      break;
  }
  return j;
}

ModelSpec spec_from(const json& j) {
  ModelSpec s = ModelSpec::defaults(parse_model_kind(j.at("kind").get<std::string>()));
  switch (s.kind) {
    case ModelKind::baseline: s.baseline_window_s = j.at("window_s").get<std::int64_t>(); break;
    case ModelKind::ridge: s.alpha = j.at("alpha").get<double>(); break;
    case ModelKind::svr:
      s.c = j.at("c").get<double>();
      s.epsilon = j.at("epsilon").get<double>();
      if (!j.at("gamma").is_null()) s.gamma = j.at("gamma").get<double>();
      s.svr_tolerance = j.at("tolerance").get<double>();
      s.svr_max_iterations = j.at("max_iterations").get<std::size_t>();
      break;
    case ModelKind::forest:
      s.n_trees = j.at("n_trees").get<std::size_t>();
      if (!j.at("max_depth").is_null()) s.max_depth = j.at("max_depth").get<std::size_t>();
      s.min_leaf = j.at("min_leaf").get<std::size_t>();
      s.bootstrap = j.at("bootstrap").get<bool>();
      if (!j.at("max_features").is_null()) s.max_features = j.at("max_features").get<std::size_t>();
      s.seed = j.at("seed").get<std::uint64_t>();
      break;
  }
  return s;
}

json fold_json(const FoldMetric& m) {
  return {{"participant", m.participant_id}, {"model", to_string(m.model)}, {"fold", m.fold},
          {"n_test", m.n_test},             {"r_squared", m.r_squared},    {"rmse", m.rmse},
          {"rmse_bpm", m.rmse_bpm}};
}

FoldMetric fold_from(const json& j) {
  return {j.at("participant").get<std::string>(), parse_model_kind(j.at("model").get<std::string>()),
          j.at("fold").get<std::size_t>(),        j.at("n_test").get<std::size_t>(),
          j.at("r_squared").get<double>(),        j.at("rmse").get<double>(),
          j.at("rmse_bpm").get<double>()};
}

}  // namespace

void write_report_json(const EvaluationReport& r, std::ostream& out) {
  json specs = json::array();
  for (const auto& s : r.specs) specs.push_back(spec_json(s));
  json folds = json::array();
  for (const auto& m : r.fold_metrics) folds.push_back(fold_json(m));
  json pooled = json::array();
  for (const auto& m : r.pooled_fold_metrics) pooled.push_back(fold_json(m));
  json parts = json::array();
  for (const auto& m : r.participant_metrics) {
    parts.push_back({{"participant", m.participant_id}, {"model", to_string(m.model)}, {"folds", m.folds},
                     {"r_squared", m.r_squared},        {"rmse", m.rmse},               {"rmse_bpm", m.rmse_bpm}});
  }
  json summary = json::array();
  for (const auto& s : r.summary) {
    summary.push_back({{"model", to_string(s.model)}, {"participants", s.participants}, {"r_squared", s.r_squared},
                       {"rmse", s.rmse},              {"rmse_bpm", s.rmse_bpm}});
  }
  json importance = nullptr;
  if (r.importance) {
    importance = {{"features", r.importance->features},
                  {"split_gain", r.importance->split_gain},
                  {"permutation", r.importance->permutation},
                  {"permutation_raw", r.importance->permutation_raw},
                  {"permutation_spread", r.importance->permutation_spread}};
  }
  const json j = {{"schema", "hrfill-report"},
                  {"version", kReportSchemaVersion},
                  {"mode", to_string(r.mode)},
                  {"target_kind", to_string(r.target_kind)},
                  {"cv", {{"folds", r.folds}, {"policy", to_string(r.policy)}, {"seed", r.seed},
                          {"stride_s", r.stride_s}, {"svr_max_rows", r.svr_max_rows}}},
                  {"deviation_mode", to_string(r.deviation)},
                  {"data_start_s", r.data_start_s},
                  {"data_end_s", r.data_end_s},
                  {"specs", specs},
                  {"participants", r.participants},
                  {"fold_metrics", folds},
                  {"pooled_fold_metrics", pooled},
                  {"participant_metrics", parts},
                  {"summary", summary},
                  {"importance", importance},
                  {"warnings", r.warnings}};
  out << j.dump(2) << '\n';
}

EvaluationReport load_report(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema") != "hrfill-report") throw DataError("not an hrfill report");
    if (j.at("version").get<int>() != kReportSchemaVersion) throw DataError("unsupported report schema version");
    EvaluationReport r;
    r.mode = parse_eval_mode(j.at("mode").get<std::string>());
    r.target_kind = parse_target_kind(j.at("target_kind").get<std::string>());
    const auto& cv = j.at("cv");
    r.folds = cv.at("folds").get<std::size_t>();
    r.policy = parse_fold_policy(cv.at("policy").get<std::string>());
    r.seed = cv.at("seed").get<std::uint64_t>();
    r.stride_s = cv.at("stride_s").get<std::int64_t>();
    r.svr_max_rows = cv.at("svr_max_rows").get<std::size_t>();
    r.deviation = parse_deviation_mode(j.at("deviation_mode").get<std::string>());
    r.data_start_s = j.at("data_start_s").get<std::int64_t>();
    r.data_end_s = j.at("data_end_s").get<std::int64_t>();
    for (const auto& s : j.at("specs")) r.specs.push_back(spec_from(s));
    r.participants = j.at("participants").get<std::vector<std::string>>();
    for (const auto& m : j.at("fold_metrics")) r.fold_metrics.push_back(fold_from(m));
    for (const auto& m : j.at("pooled_fold_metrics")) r.pooled_fold_metrics.push_back(fold_from(m));
    for (const auto& m : j.at("participant_metrics")) {
      r.participant_metrics.push_back({m.at("participant").get<std::string>(),
                                       parse_model_kind(m.at("model").get<std::string>()),
                                       m.at("folds").get<std::size_t>(), m.at("r_squared").get<double>(),
                                       m.at("rmse").get<double>(), m.at("rmse_bpm").get<double>()});
    }
    for (const auto& s : j.at("summary")) {
      r.summary.push_back({parse_model_kind(s.at("model").get<std::string>()), s.at("participants").get<std::size_t>(),
                           s.at("r_squared").get<double>(), s.at("rmse").get<double>(),
                           s.at("rmse_bpm").get<double>()});
    }
    if (const auto& imp = j.at("importance"); !imp.is_null()) {
      ImportanceTable t;
      t.features = imp.at("features").get<std::vector<std::string>>();
      t.split_gain = imp.at("split_gain").get<std::vector<double>>();
      t.permutation = imp.at("permutation").get<std::vector<double>>();
      t.permutation_raw = imp.at("permutation_raw").get<std::vector<double>>();
      t.permutation_spread = imp.at("permutation_spread").get<std::vector<double>>();
      r.importance = std::move(t);
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("report is malformed: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("report is malformed: ") + e.what());
  }
}

EvaluationReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  return load_report(in);
}

void write_metrics_csv(const EvaluationReport& r, std::ostream& out) {
  out << "scope,participant,model,fold,metric,value\n";
  const auto emit = [&](std::string_view scope, const std::string& pid, ModelKind model, const std::string& fold,
                        std::string_view metric, double value) {
    out << scope << ',' << pid << ',' << to_string(model) << ',' << fold << ',' << metric << ','
        << csv::format_double(value) << '\n';
  };
  for (const auto& m : r.fold_metrics) {
    const auto fold = std::to_string(m.fold);
    emit("fold", m.participant_id, m.model, fold, "r_squared", m.r_squared);
    emit("fold", m.participant_id, m.model, fold, "rmse", m.rmse);
    emit("fold", m.participant_id, m.model, fold, "rmse_bpm", m.rmse_bpm);
  }
  for (const auto& m : r.pooled_fold_metrics) {
    const auto fold = std::to_string(m.fold);
    emit("pooled_fold", "", m.model, fold, "r_squared", m.r_squared);
    emit("pooled_fold", "", m.model, fold, "rmse", m.rmse);
    emit("pooled_fold", "", m.model, fold, "rmse_bpm", m.rmse_bpm);
  }
  for (const auto& m : r.participant_metrics) {
    emit("participant", m.participant_id, m.model, "", "r_squared", m.r_squared);
    emit("participant", m.participant_id, m.model, "", "rmse", m.rmse);
    emit("participant", m.participant_id, m.model, "", "rmse_bpm", m.rmse_bpm);
  }
  for (const auto& s : r.summary) {
    emit("mean", "", s.model, "", "r_squared", s.r_squared);
    emit("mean", "", s.model, "", "rmse", s.rmse);
    emit("mean", "", s.model, "", "rmse_bpm", s.rmse_bpm);
  }
}

void write_summary(const EvaluationReport& r, std::ostream& out) {
  out << to_string(r.mode) << " evaluation, target " << to_string(r.target_kind) << ", " << r.folds << "-fold "
      << to_string(r.policy) << " CV, seed " << r.seed << ", " << r.participants.size() << " participant"
      << (r.participants.size() == 1 ? "" : "s") << '\n';
  const std::string unit = r.target_kind == TargetKind::bpm ? "RMSE (bpm)" : "RMSE (z)";
  out << std::left << std::setw(10) << "model" << std::right << std::setw(10) << "R2" << std::setw(14) << unit
      << '\n';
  for (const auto& s : r.summary) {
    std::ostringstream r2, e;
    r2 << std::fixed << std::setprecision(4) << s.r_squared;
    e << std::fixed << std::setprecision(4) << s.rmse;
    out << std::left << std::setw(10) << to_string(s.model) << std::right << std::setw(10) << r2.str()
        << std::setw(14) << e.str() << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << kTraceHeader << '\n';
  for (const auto& row : rows) {
    out << row.timestamp_s << ',' << csv::format_double(row.actual_bpm) << ','
        << csv::format_double(row.predicted_bpm) << '\n';
  }
}

void export_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "traces", ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    return out;
  };
  {
    auto out = open(dir / "report.json");
    write_report_json(report, out);
  }
  {
    auto out = open(dir / "metrics.csv");
    write_metrics_csv(report, out);
  }
  {
    auto out = open(dir / "summary.txt");
    write_summary(report, out);
  }
  for (const auto& t : report.traces) {
    auto out = open(dir / "traces" / (t.participant_id + "_" + std::string(to_string(t.model)) + ".csv"));
    write_trace_csv(out, t.rows);
  }
}

std::vector<TraceRow> prediction_trace(const TrainedModel& model, const AlignedStream& stream, int tz_offset_min,
                                       const std::optional<ZScoreParams>& zscore) {
  if (model.target_kind == TargetKind::zscore && !zscore) {
    throw UsageError("a z-score model needs the participant's z-score parameters to report bpm");
  }
  std::vector<TraceRow> rows;
  if (const auto* b = std::get_if<BaselineState>(&model.state)) {
    const auto series = HrSeries::from_frames(stream.frames);
    const auto grid = baseline_grid(series, b->window_s);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (series.observed(i) && !std::isnan(grid[i])) {
        rows.push_back({series.start_s + static_cast<std::int64_t>(i), series.bpm[i], grid[i]});
      }
    }
    return rows;
  }
  const FeatureOptions options{model.deviation, tz_offset_min};
  std::vector<FeatureRow> features;
  for (const auto& f : stream.frames) {
    if (!is_complete_case(f)) continue;
    features.push_back(make_feature_row(f.timestamp_s, *f.accel, *f.gps, options));
    rows.push_back({f.timestamp_s, *f.hr, 0.0});
  }
  const auto pred = model.predict(features);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].predicted_bpm = model.target_kind == TargetKind::zscore ? zscore_invert(pred[i], *zscore) : pred[i];
  }
  return rows;
}

void export_prediction_trace(const TrainedModel& model, const AlignedStream& stream, int tz_offset_min,
                             const std::optional<ZScoreParams>& zscore, const std::filesystem::path& path) {
  const auto rows = prediction_trace(model, stream, tz_offset_min, zscore);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_trace_csv(out, rows);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace hrfill
