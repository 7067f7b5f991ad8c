#include "hrfill/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hrfill/error.hpp"
#include "hrfill/parallel.hpp"
#include "hrfill/random.hpp"

namespace hrfill {

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw DataError("r_squared: length mismatch");
  if (actual.size() < 2) throw DataError("r_squared: need at least 2 values");
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (!(ss_tot > 0.0)) throw DataError("r_squared: actual values are constant, R^2 is undefined");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw DataError("rmse: length mismatch");
  if (actual.empty()) throw DataError("rmse: no values");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) ss += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

std::string_view to_string(FoldPolicy policy) { return policy == FoldPolicy::shuffled ? "shuffled" : "blocked"; }

FoldPolicy parse_fold_policy(std::string_view text) {
  if (text == "shuffled") return FoldPolicy::shuffled;
  if (text == "blocked") return FoldPolicy::blocked;
  throw UsageError("unknown fold policy '" + std::string(text) + "' (expected shuffled or blocked)");
}

std::string_view to_string(EvalMode mode) { return mode == EvalMode::personalized ? "personalized" : "generalized"; }

EvalMode parse_eval_mode(std::string_view text) {
  if (text == "personalized") return EvalMode::personalized;
  if (text == "generalized") return EvalMode::generalized;
  throw UsageError("unknown mode '" + std::string(text) + "' (expected personalized or generalized)");
}

std::vector<std::size_t> FoldAssignment::test_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] == fold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] != fold) out.push_back(r);
  }
  return out;
}

FoldAssignment kfold_split(std::size_t n_rows, std::size_t k, FoldPolicy policy, std::uint64_t seed) {
  if (k < 2) throw UsageError("k-fold: k must be >= 2");
  if (n_rows < k) {
    throw UsageError("k-fold: " + std::to_string(n_rows) + " rows cannot fill " + std::to_string(k) + " folds");
  }
  FoldAssignment a;
  a.k = k;
  a.policy = policy;
  a.seed = seed;
  a.fold_of_row.resize(n_rows);

  std::vector<std::uint32_t> order(n_rows);
  std::iota(order.begin(), order.end(), 0U);
  if (policy == FoldPolicy::shuffled) {
    Rng rng(seed);
    shuffle(std::span<std::uint32_t>(order), rng);
  }
  // The first n % k chunks get one extra row.
  const std::size_t base = n_rows / k;
  const std::size_t extra = n_rows % k;
  std::size_t at = 0;
  for (std::size_t fold = 0; fold < k; ++fold) {
    const std::size_t size = base + (fold < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) a.fold_of_row[order[at++]] = static_cast<std::uint32_t>(fold);
  }
  return a;
}

std::vector<std::size_t> subsample_rows(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (cap == 0 || n <= cap) return idx;
  Rng rng(seed);
  shuffle(std::span<std::size_t>(idx), rng);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ParticipantData prepare_participant(const AlignedStream& stream, const FeatureOptions& options,
                                    std::int64_t stride_s) {
  ParticipantData p;
  p.participant_id = stream.participant_id;
  p.features = build_feature_matrix(stream, TargetKind::bpm, std::nullopt, options, stride_s);
  p.hr = HrSeries::from_frames(stream.frames);
  return p;
}

const ModelSummary& EvaluationReport::summary_for(ModelKind model) const {
  for (const auto& s : summary) {
    if (s.model == model) return s;
  }
  throw UsageError("report has no results for model '" + std::string(to_string(model)) + "'");
}

void aggregate(EvaluationReport& report) {
  report.participant_metrics.clear();
  report.summary.clear();
  std::vector<ModelKind> models;
  for (const auto& s : report.specs) models.push_back(s.kind);

  for (const auto& pid : report.participants) {
    for (auto model : models) {
      ParticipantMetric pm{pid, model, 0, 0.0, 0.0, 0.0};
      for (const auto& fm : report.fold_metrics) {
        if (fm.participant_id != pid || fm.model != model) continue;
        ++pm.folds;
        pm.r_squared += fm.r_squared;
        pm.rmse += fm.rmse;
        pm.rmse_bpm += fm.rmse_bpm;
      }
      if (pm.folds == 0) continue;
      const auto k = static_cast<double>(pm.folds);
      pm.r_squared /= k;
      pm.rmse /= k;
      pm.rmse_bpm /= k;
      report.participant_metrics.push_back(pm);
    }
  }
  for (auto model : models) {
    ModelSummary s{model, 0, 0.0, 0.0, 0.0};
    for (const auto& pm : report.participant_metrics) {
      if (pm.model != model) continue;
      ++s.participants;
      s.r_squared += pm.r_squared;
      s.rmse += pm.rmse;
      s.rmse_bpm += pm.rmse_bpm;
    }
    if (s.participants == 0) continue;
    const auto n = static_cast<double>(s.participants);
    s.r_squared /= n;
    s.rmse /= n;
    s.rmse_bpm /= n;
    report.summary.push_back(s);
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_specs(std::span<const ModelSpec> specs) {
  if (specs.empty()) throw UsageError("evaluation needs at least one model spec");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (specs[i].kind == specs[j].kind) {
        throw UsageError("model kind '" + std::string(to_string(specs[i].kind)) + "' listed twice");
      }
    }
  }
}

const ModelSpec* find_spec(std::span<const ModelSpec> specs, ModelKind kind) {
  for (const auto& s : specs) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

// Baseline prediction (bpm) for each test row, computed from the heart-rate
// timeline with the test seconds removed. NaN where uncovered.
std::vector<double> masked_baseline(const ParticipantData& p, std::span<const std::size_t> test_rows,
                                    std::int64_t window_s) {
  HrSeries masked = p.hr;
  const auto n = static_cast<std::int64_t>(masked.size());
  for (auto r : test_rows) {
    const std::int64_t i = p.features.timestamps[r] - masked.start_s;
    if (i >= 0 && i < n) masked.bpm[static_cast<std::size_t>(i)] = kNaN;
  }
  const auto grid = baseline_grid(masked, window_s);
  std::vector<double> out;
  out.reserve(test_rows.size());
  for (auto r : test_rows) {
    const std::int64_t i = p.features.timestamps[r] - masked.start_s;
    out.push_back(i >= 0 && i < n ? grid[static_cast<std::size_t>(i)] : kNaN);
  }
  return out;
}

Dataset design_of(const ParticipantData& p, std::span<const std::size_t> rows) {
  return p.features.subset(rows).design();
}

// Fits one learned model; SVR sees a seeded subsample of the training rows.
TrainedModel fit_for_cv(const ModelSpec& spec, const Dataset& train, TargetKind target, const CvConfig& cv,
                        DeviationMode deviation, std::uint64_t stream, std::size_t threads) {
  if (spec.kind == ModelKind::svr && cv.svr_max_rows > 0 && train.rows() > cv.svr_max_rows) {
    const auto rows = subsample_rows(train.rows(), cv.svr_max_rows, mix_seed(cv.seed, stream));
    return fit_model(spec, train.subset(rows), target, deviation, threads);
  }
  return fit_model(spec, train, target, deviation, threads);
}

struct TaskResult {
  std::vector<FoldMetric> metrics;
  std::vector<FoldMetric> pooled;
  std::vector<PredictionTrace> trace_parts;
  std::optional<ImportanceTable> importance;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::size_t, std::size_t>> uncovered;  // (participant, test rows the baseline cannot score)
};

// One warning per participant for test rows dropped because the baseline
// had no preceding observations (always the first window of the timeline).
void report_uncovered(EvaluationReport& report, std::span<const ParticipantData> participants,
                      const std::vector<TaskResult>& results) {
  std::vector<std::size_t> total(participants.size(), 0);
  for (const auto& r : results) {
    for (const auto& [pi, n] : r.uncovered) total[pi] += n;
  }
  for (std::size_t pi = 0; pi < participants.size(); ++pi) {
    if (total[pi] == 0) continue;
    report.warnings.push_back("participant '" + participants[pi].participant_id + "': " + std::to_string(total[pi]) +
                              " test rows without baseline coverage excluded from scoring for every model");
  }
}

void sort_traces(std::vector<PredictionTrace>& traces) {
  for (auto& t : traces) {
    std::sort(t.rows.begin(), t.rows.end(),
              [](const TraceRow& a, const TraceRow& b) { return a.timestamp_s < b.timestamp_s; });
  }
}

// Concatenates per-task trace fragments into one trace per (participant,
// model), participants first, then models in spec order.
std::vector<PredictionTrace> merge_traces(const std::vector<TaskResult>& results,
                                          const std::vector<std::string>& participants,
                                          std::span<const ModelSpec> specs) {
  std::vector<PredictionTrace> merged;
  for (const auto& pid : participants) {
    for (const auto& spec : specs) {
      PredictionTrace t{pid, spec.kind, {}};
      for (const auto& r : results) {
        for (const auto& part : r.trace_parts) {
          if (part.participant_id == pid && part.model == spec.kind) {
            t.rows.insert(t.rows.end(), part.rows.begin(), part.rows.end());
          }
        }
      }
      if (!t.rows.empty()) merged.push_back(std::move(t));
    }
  }
  sort_traces(merged);
  return merged;
}

EvaluationReport report_header(EvalMode mode, std::span<const ParticipantData> participants,
                               std::span<const ModelSpec> specs, const CvConfig& cv) {
  EvaluationReport report;
  report.mode = mode;
  report.target_kind = mode == EvalMode::personalized ? TargetKind::bpm : TargetKind::zscore;
  report.specs.assign(specs.begin(), specs.end());
  report.folds = cv.folds;
  report.policy = cv.policy;
  report.seed = cv.seed;
  report.svr_max_rows = cv.svr_max_rows;
  report.deviation = cv.deviation;
  bool first = true;
  for (const auto& p : participants) {
    if (p.features.empty()) continue;
    const auto [lo, hi] = std::minmax_element(p.features.timestamps.begin(), p.features.timestamps.end());
    report.data_start_s = first ? *lo : std::min(report.data_start_s, *lo);
    report.data_end_s = first ? *hi : std::max(report.data_end_s, *hi);
    first = false;
  }
  return report;
}

std::int64_t infer_stride(const ParticipantData& p) {
  const auto& ts = p.features.timestamps;
  if (ts.size() < 2) return 1;
  std::int64_t g = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) g = std::gcd(g, ts[i] - ts[i - 1]);
  return std::max<std::int64_t>(g, 1);
}

}  // namespace

EvaluationReport run_personalized(std::span<const ParticipantData> participants, std::span<const ModelSpec> specs,
                                  const CvConfig& cv) {
  check_specs(specs);
  if (participants.empty()) throw UsageError("personalized evaluation needs at least one participant");
  EvaluationReport report = report_header(EvalMode::personalized, participants, specs, cv);
  report.stride_s = infer_stride(participants.front());

  std::vector<std::size_t> usable;
  std::vector<FoldAssignment> folds(participants.size());
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const auto& p = participants[i];
    if (p.features.size() < cv.folds) {
      report.warnings.push_back("participant '" + p.participant_id + "' skipped: " +
                                std::to_string(p.features.size()) + " rows is fewer than " +
                                std::to_string(cv.folds) + " folds");
      continue;
    }
    folds[i] = kfold_split(p.features.size(), cv.folds, cv.policy, cv.seed);
    usable.push_back(i);
    report.participants.push_back(p.participant_id);
  }
  if (usable.empty()) throw DataError("no participant has enough rows for " + std::to_string(cv.folds) + "-fold CV");

  const ModelSpec* baseline = find_spec(specs, ModelKind::baseline);
  const std::size_t n_tasks = usable.size() * cv.folds;
  std::vector<TaskResult> results(n_tasks);

  parallel_for(n_tasks, cv.threads, [&](std::size_t task) {
    const std::size_t pi = usable[task / cv.folds];
    const std::size_t fold = task % cv.folds;
    const ParticipantData& p = participants[pi];
    TaskResult& out = results[task];

    const auto train_rows = folds[pi].train_rows(fold);
    auto test_rows = folds[pi].test_rows(fold);
    std::vector<double> base_pred;
    if (baseline) {
      base_pred = masked_baseline(p, test_rows, baseline->baseline_window_s);
      std::vector<std::size_t> covered;
      std::vector<double> covered_pred;
      for (std::size_t k = 0; k < test_rows.size(); ++k) {
        if (std::isnan(base_pred[k])) continue;
        covered.push_back(test_rows[k]);
        covered_pred.push_back(base_pred[k]);
      }
      out.uncovered.emplace_back(pi, test_rows.size() - covered.size());
      test_rows = std::move(covered);
      base_pred = std::move(covered_pred);
    }
    if (test_rows.size() < 2) {
      out.warnings.push_back("participant '" + p.participant_id + "' fold " + std::to_string(fold) +
                             " skipped: fewer than 2 scorable test rows");
      return;
    }

    const Dataset train = design_of(p, train_rows);
    const Dataset test = design_of(p, test_rows);
    const std::vector<double> actual(test.y.data(), test.y.data() + test.y.size());

    std::vector<FoldMetric> metrics;
    std::vector<PredictionTrace> parts;
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const ModelSpec& spec = specs[s];
      std::vector<double> pred;
      if (spec.kind == ModelKind::baseline) {
        pred = base_pred;
      } else {
        const auto model = fit_for_cv(spec, train, TargetKind::bpm, cv, cv.deviation,
                                      mix_seed(pi, fold, s), 1);
        const Eigen::VectorXd v = model.predict(test.x);
        pred.assign(v.data(), v.data() + v.size());
        if (spec.kind == ModelKind::forest && cv.importance) {
          out.importance = importance_table(std::get<ForestState>(model.state), train,
                                            mix_seed(cv.seed, pi, fold), 1);
        }
      }
      FoldMetric m{p.participant_id, spec.kind, fold, actual.size(), 0.0, 0.0, 0.0};
      try {
        m.r_squared = r_squared(actual, pred);
      } catch (const DataError& e) {
        out.warnings.push_back("participant '" + p.participant_id + "' fold " + std::to_string(fold) +
                               " skipped: " + e.what());
        return;
      }
      m.rmse = rmse(actual, pred);
      m.rmse_bpm = m.rmse;
      metrics.push_back(m);
      if (cv.traces) {
        PredictionTrace t{p.participant_id, spec.kind, {}};
        for (std::size_t k = 0; k < actual.size(); ++k) {
          t.rows.push_back({p.features.timestamps[test_rows[k]], actual[k], pred[k]});
        }
        parts.push_back(std::move(t));
      }
    }
    out.metrics = std::move(metrics);
    out.trace_parts = std::move(parts);
  });

  std::vector<ImportanceTable> tables;
  for (auto& r : results) {
    report.fold_metrics.insert(report.fold_metrics.end(), r.metrics.begin(), r.metrics.end());
    report.warnings.insert(report.warnings.end(), r.warnings.begin(), r.warnings.end());
    if (r.importance && !r.metrics.empty()) tables.push_back(*r.importance);
  }
  report_uncovered(report, participants, results);
  if (!tables.empty()) report.importance = average_importance(tables);
  if (cv.traces) report.traces = merge_traces(results, report.participants, specs);
  aggregate(report);
  return report;
}

EvaluationReport run_generalized(std::span<const ParticipantData> participants, std::span<const ModelSpec> specs,
                                 const CvConfig& cv) {
  check_specs(specs);
  if (participants.size() < 2) {
    throw UsageError("generalized evaluation pools participants and needs at least 2, got " +
                     std::to_string(participants.size()));
  }
  EvaluationReport report = report_header(EvalMode::generalized, participants, specs, cv);
  report.stride_s = infer_stride(participants.front());

  std::vector<std::size_t> usable;
  std::vector<FoldAssignment> folds(participants.size());
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const auto& p = participants[i];
    if (p.features.size() < cv.folds) {
      report.warnings.push_back("participant '" + p.participant_id + "' skipped: " +
                                std::to_string(p.features.size()) + " rows is fewer than " +
                                std::to_string(cv.folds) + " folds");
      continue;
    }
    folds[i] = kfold_split(p.features.size(), cv.folds, cv.policy, cv.seed);
    usable.push_back(i);
    report.participants.push_back(p.participant_id);
  }
  if (usable.size() < 2) throw DataError("generalized evaluation needs at least 2 participants with enough rows");

  const ModelSpec* baseline = find_spec(specs, ModelKind::baseline);
  std::vector<TaskResult> results(cv.folds);
  std::vector<ImportanceTable> tables;

  for (std::size_t fold = 0; fold < cv.folds; ++fold) {
    TaskResult& out = results[fold];

    struct Slice {
      std::size_t participant;
      ZScoreParams zs;
      std::vector<std::size_t> test_rows;
      std::vector<double> base_bpm;
    };
    std::vector<Slice> slices;
    Dataset train;
    Dataset test;
    std::vector<Dataset> train_parts;
    std::vector<Dataset> test_parts;

    for (auto pi : usable) {
      const ParticipantData& p = participants[pi];
      const auto train_rows = folds[pi].train_rows(fold);
      auto test_rows = folds[pi].test_rows(fold);
      std::vector<double> train_bpm;
      for (auto r : train_rows) train_bpm.push_back(p.features.target[r]);
      ZScoreParams zs;
      try {
        zs = zscore_fit(train_bpm);
      } catch (const DataError& e) {
        out.warnings.push_back("participant '" + p.participant_id + "' excluded from fold " + std::to_string(fold) +
                               ": " + e.what());
        continue;
      }
      std::vector<double> base_bpm;
      if (baseline) {
        const auto pred = masked_baseline(p, test_rows, baseline->baseline_window_s);
        std::vector<std::size_t> covered;
        for (std::size_t k = 0; k < test_rows.size(); ++k) {
          if (std::isnan(pred[k])) continue;
          covered.push_back(test_rows[k]);
          base_bpm.push_back(pred[k]);
        }
        out.uncovered.emplace_back(pi, test_rows.size() - covered.size());
        test_rows = std::move(covered);
      }
      Dataset tr = design_of(p, train_rows);
      for (Eigen::Index r = 0; r < tr.y.size(); ++r) tr.y(r) = zscore_apply(tr.y(r), zs);
      Dataset te = design_of(p, test_rows);
      for (Eigen::Index r = 0; r < te.y.size(); ++r) te.y(r) = zscore_apply(te.y(r), zs);
      train_parts.push_back(std::move(tr));
      test_parts.push_back(std::move(te));
      slices.push_back({pi, zs, std::move(test_rows), std::move(base_bpm)});
    }
    if (slices.empty()) {
      out.warnings.push_back("fold " + std::to_string(fold) + " skipped: no participant has a usable training split");
      continue;
    }

    const auto stack = [](const std::vector<Dataset>& parts) {
      Dataset d;
      d.feature_names = parts.front().feature_names;
      Eigen::Index rows = 0;
      for (const auto& p : parts) rows += p.x.rows();
      d.x.resize(rows, parts.front().x.cols());
      d.y.resize(rows);
      Eigen::Index at = 0;
      for (const auto& p : parts) {
        d.x.middleRows(at, p.x.rows()) = p.x;
        d.y.segment(at, p.y.size()) = p.y;
        at += p.x.rows();
      }
      return d;
    };
    train = stack(train_parts);
    test = stack(test_parts);
    train_parts.clear();

    // Predictions in z units for every pooled test row, per spec.
    std::vector<std::vector<double>> pred(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const ModelSpec& spec = specs[s];
      if (spec.kind == ModelKind::baseline) {
        for (const auto& sl : slices) {
          for (double b : sl.base_bpm) pred[s].push_back(zscore_apply(b, sl.zs));
        }
      } else {
        const auto model = fit_for_cv(spec, train, TargetKind::zscore, cv, cv.deviation, mix_seed(fold, s),
                                      cv.threads);
        const Eigen::VectorXd v = model.predict(test.x);
        pred[s].assign(v.data(), v.data() + v.size());
        if (spec.kind == ModelKind::forest && cv.importance) {
          tables.push_back(importance_table(std::get<ForestState>(model.state), train, mix_seed(cv.seed, fold),
                                            cv.threads));
        }
      }
    }

    const std::vector<double> actual(test.y.data(), test.y.data() + test.y.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
      std::size_t at = 0;
      double pooled_ss_bpm = 0.0;
      for (const auto& sl : slices) {
        const ParticipantData& p = participants[sl.participant];
        const std::size_t n = sl.test_rows.size();
        const std::span<const double> a(actual.data() + at, n);
        const std::span<const double> f(pred[s].data() + at, n);
        at += n;
        if (cv.traces) {
          PredictionTrace t{p.participant_id, specs[s].kind, {}};
          for (std::size_t k = 0; k < n; ++k) {
            t.rows.push_back({p.features.timestamps[sl.test_rows[k]], p.features.target[sl.test_rows[k]],
                              zscore_invert(f[k], sl.zs)});
          }
          out.trace_parts.push_back(std::move(t));
        }
        for (std::size_t k = 0; k < n; ++k) pooled_ss_bpm += std::pow((a[k] - f[k]) * sl.zs.std, 2);
        if (n < 2) {
          out.warnings.push_back("participant '" + p.participant_id + "' fold " + std::to_string(fold) +
                                 ": fewer than 2 scorable test rows");
          continue;
        }
        FoldMetric m{p.participant_id, specs[s].kind, fold, n, 0.0, 0.0, 0.0};
        try {
          m.r_squared = r_squared(a, f);
        } catch (const DataError& e) {
          out.warnings.push_back("participant '" + p.participant_id + "' fold " + std::to_string(fold) + ": " +
                                 e.what());
          continue;
        }
        m.rmse = rmse(a, f);
        m.rmse_bpm = m.rmse * sl.zs.std;
        out.metrics.push_back(m);
      }
      if (actual.size() >= 2) {
        FoldMetric pooled{"", specs[s].kind, fold, actual.size(), 0.0, 0.0, 0.0};
        try {
          pooled.r_squared = r_squared(actual, pred[s]);
          pooled.rmse = rmse(actual, pred[s]);
          pooled.rmse_bpm = std::sqrt(pooled_ss_bpm / static_cast<double>(actual.size()));
          out.pooled.push_back(pooled);
        } catch (const DataError& e) {
          out.warnings.push_back("fold " + std::to_string(fold) + " pooled metrics skipped: " + e.what());
        }
      }
    }
  }

  for (auto& r : results) {
    report.fold_metrics.insert(report.fold_metrics.end(), r.metrics.begin(), r.metrics.end());
    report.pooled_fold_metrics.insert(report.pooled_fold_metrics.end(), r.pooled.begin(), r.pooled.end());
    report.warnings.insert(report.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  // Participant-major order, matching the personalized report.
  std::stable_sort(report.fold_metrics.begin(), report.fold_metrics.end(), [&](const FoldMetric& a, const FoldMetric& b) {
    const auto pos = [&](const std::string& id) {
      return std::find(report.participants.begin(), report.participants.end(), id) - report.participants.begin();
    };
    return pos(a.participant_id) < pos(b.participant_id);
  });
  report_uncovered(report, participants, results);
  if (!tables.empty()) report.importance = average_importance(tables);
  if (cv.traces) report.traces = merge_traces(results, report.participants, specs);
  aggregate(report);
  return report;
}

}  // namespace hrfill
