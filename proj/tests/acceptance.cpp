// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "hrfill/baseline.hpp"
#include "hrfill/config.hpp"
#include "hrfill/csv.hpp"
#include "hrfill/evaluate.hpp"
#include "hrfill/features.hpp"
#include "hrfill/forest.hpp"
#include "hrfill/importance.hpp"
#include "hrfill/model.hpp"
#include "hrfill/random.hpp"
#include "hrfill/ridge.hpp"
#include "hrfill/svr.hpp"
#include "hrfill/synthgen.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hrfill;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Dataset random_regression(std::mt19937_64& rng, std::size_t n, std::size_t p, double noise) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.y.resize(static_cast<Eigen::Index>(n));
  Eigen::VectorXd w(static_cast<Eigen::Index>(p));
  for (auto& v : w) v = g(rng);
  for (Eigen::Index c = 0; c < d.x.cols(); ++c) {
    const double s = scale(rng), shift = g(rng) * 3.0;
    for (Eigen::Index r = 0; r < d.x.rows(); ++r) d.x(r, c) = shift + s * g(rng);
  }
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) d.y(r) = 2.0 + d.x.row(r).dot(w) + noise * g(rng);
  for (std::size_t c = 0; c < p; ++c) d.feature_names.push_back("f" + std::to_string(c));
  return d;
}

// 1. Feature arithmetic against exact and independent oracles.
Outcome criterion_features() {
  Outcome o;
  const int triples[][4] = {{0, 0, 0, 0}, {3, 4, 0, 5}, {0, 5, 12, 13}, {2, 3, 6, 7}, {1, 4, 8, 9}, {4, 4, 7, 9},
                            {2, 10, 11, 15}, {-6, 8, 0, 10}, {8, -9, 12, 17}, {-2, -6, -9, 11}};
  for (const auto& t : triples) {
    const double m = accel_magnitude(t[0], t[1], t[2]);
    o.require(m == t[3], "magnitude(" + std::to_string(t[0]) + "," + std::to_string(t[1]) + "," +
                             std::to_string(t[2]) + ") = " + fmt(m, 17));
  }

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  std::size_t rounding_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto row = make_feature_row(0, Accel{0, 0, 1}, Gps{lat(rng), lon(rng)}, FeatureOptions{});
    if (round_coordinate(row.lat2, 1) != row.lat1 || round_coordinate(row.lat1, 0) != row.lat0 ||
        round_coordinate(row.lon2, 1) != row.lon1 || round_coordinate(row.lon1, 0) != row.lon0) {
      ++rounding_bad;
    }
  }
  o.require(rounding_bad == 0, std::to_string(rounding_bad) + " of 10000 coordinates break rounding consistency");

  std::uniform_int_distribution<std::int64_t> epoch(0, 4'102'444'800);
  std::uniform_int_distribution<int> tz(-kMaxTzOffsetMinutes, kMaxTzOffsetMinutes);
  std::size_t clock_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto e = epoch(rng);
    const int offset = tz(rng);
    const auto got = time_components(e, offset);
    const auto want = oracle::clock_time(e, offset);
    if (got.hour != want.hour || got.minute != want.minute || got.second != want.second) ++clock_bad;
  }
  o.require(clock_bad == 0, std::to_string(clock_bad) + " of 1000 epochs disagree with the calendar oracle");
  o.note("10 triples exact, 10000 coordinates consistent, 1000 epochs match");
  return o;
}

// 2. Ridge at alpha 0 against QR least squares; shrinkage along the alpha grid.
Outcome criterion_ridge() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick_p(1, 11);
  double worst = 0.0;
  std::size_t non_monotone = 0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t p = pick_p(rng);
    std::uniform_int_distribution<std::size_t> pick_n(p + 5, 200);
    const auto d = random_regression(rng, pick_n(rng), p, 0.5);
    const auto fit = ridge_solve(d, 0.0);
    const auto want = oracle::ols(d.x, d.y);
    worst = std::max(worst, (fit.raw_coefficients() - want.coefficients).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(fit.raw_intercept() - want.intercept));

    double previous = std::numeric_limits<double>::infinity();
    for (double alpha : {0.0, 0.1, 1.0, 10.0, 1e3, 1e12}) {
      const double norm = ridge_solve(d, alpha).coefficients.norm();
      if (norm > previous) ++non_monotone;
      previous = norm;
    }
  }
  o.require(worst <= 1e-8, "max coefficient deviation from OLS " + sci(worst) + " > 1e-8");
  o.require(non_monotone == 0, std::to_string(non_monotone) + " alpha steps increased the coefficient norm");
  o.note("50 instances, max |w - w_ols| = " + sci(worst) + ", norm non-increasing over the alpha grid");
  return o;
}

// 3. SVR dual feasibility, support-vector KKT rule, and a QP oracle.
Outcome criterion_svr() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pick_c(0.5, 5.0), pick_eps(0.05, 0.5), pick_gamma(0.1, 1.0);
  double worst_box = 0.0, worst_pred = 0.0;
  std::size_t kkt_bad = 0;
  for (int k = 0; k < 20; ++k) {
    const auto d = random_regression(rng, 20, 3, 1.0);
    const Eigen::MatrixXd x = Standardizer::fit(d.x).apply(d.x);
    SvrParams params;
    params.c = pick_c(rng);
    params.epsilon = pick_eps(rng);
    params.gamma = pick_gamma(rng);
    params.tolerance = 1e-9;
    const auto sol = solve_svr_dual(x, d.y, params);
    const auto ref = oracle::svr_qp(x, d.y, params.c, params.epsilon, params.gamma, 20000);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      worst_box = std::max(worst_box, std::abs(sol.beta(i)) - params.c);
      double f = sol.bias;
      for (Eigen::Index j = 0; j < x.rows(); ++j) f += sol.beta(j) * rbf_kernel(x.row(j), x.row(i), params.gamma);
      if (std::abs(d.y(i) - f) > params.epsilon + 1e-3 && sol.beta(i) == 0.0) ++kkt_bad;
      worst_pred = std::max(worst_pred, std::abs(f - ref.predict(x, x.row(i), params.gamma)));
    }
  }
  o.require(worst_box <= 1e-9, "dual coefficient outside [-C, C] by " + sci(worst_box));
  o.require(kkt_bad == 0, std::to_string(kkt_bad) + " points outside the tube are not support vectors");
  o.require(worst_pred <= 1e-3, "max prediction gap to the QP oracle " + sci(worst_pred) + " > 1e-3");
  o.note("20 instances, max prediction gap to QP oracle " + sci(worst_pred));
  return o;
}

Dataset synth_design(std::int64_t hours, std::int64_t stride, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.duration_s = hours * 3600;
  cfg.seed = seed;
  const auto p = generate_participant(cfg, 0);
  const auto s = align_streams(p.accel, p.gps, p.hr, p.profile.participant_id);
  return build_feature_matrix(s, TargetKind::bpm, std::nullopt, FeatureOptions{}, stride).design();
}

// 4. Forest determinism across thread counts, prediction bounds, gain normalization.
Outcome criterion_forest() {
  Outcome o;
  const Dataset d = synth_design(24, 20, 4);
  ModelSpec spec = ModelSpec::defaults(ModelKind::forest);
  spec.seed = 4;
  const auto one = fit_model(spec, d, TargetKind::bpm, DeviationMode::all, 1);
  const auto eight = fit_model(spec, d, TargetKind::bpm, DeviationMode::all, 8);

  std::mt19937_64 rng(4);
  Eigen::MatrixXd queries(2000, d.x.cols());
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    std::uniform_int_distribution<Eigen::Index> row(0, d.x.rows() - 1);
    queries.row(r) = d.x.row(row(rng));
    std::normal_distribution<double> g(0.0, 2.0);
    for (Eigen::Index c = 0; c < queries.cols(); ++c) {
      if (r % 2 == 1) queries(r, c) += g(rng) * std::max(1.0, std::abs(queries(r, c)));
    }
  }
  const Eigen::VectorXd p1 = one.predict(queries);
  const Eigen::VectorXd p8 = eight.predict(queries);
  o.require(same_bits(p1, p8), "predictions differ between 1 and 8 threads");

  const Eigen::VectorXd train_pred = one.predict(d.x);
  const double lo = d.y.minCoeff(), hi = d.y.maxCoeff();
  const bool inside = p1.minCoeff() >= lo && p1.maxCoeff() <= hi && train_pred.minCoeff() >= lo &&
                      train_pred.maxCoeff() <= hi;
  o.require(inside, "prediction outside the training-target range");

  double sum = 0.0;
  for (double g : importance_split_gain(std::get<ForestState>(one.state))) sum += g;
  o.require(std::abs(sum - 1.0) <= 1e-9, "split-gain importances sum to " + fmt(sum, 12));
  o.note(std::to_string(d.rows()) + " rows, 100 trees, bit-identical at 1 vs 8 threads, range [" + fmt(lo, 2) +
         ", " + fmt(hi, 2) + "] respected, gain sum - 1 = " + sci(sum - 1.0));
  return o;
}

// 5. Baseline against the closed-form block means of a linear ramp.
Outcome criterion_baseline() {
  Outcome o;
  HrSeries ramp{1'551'398'400, {}};
  const double a = 55.0, slope = 0.0025;
  const std::int64_t w = 1800;
  for (std::int64_t i = 0; i < 6 * w + 123; ++i) ramp.bpm.push_back(a + slope * static_cast<double>(i));
  const auto trace = baseline_interpolate(ramp, w);
  double worst = 0.0;
  for (std::size_t k = 0; k < trace.timestamps.size(); ++k) {
    const auto i = trace.timestamps[k] - ramp.start_s;
    worst = std::max(worst, std::abs(trace.predicted[k] - oracle::ramp_block_mean(a, slope, i / w, w)));
  }
  o.require(trace.timestamps.size() == ramp.size() - static_cast<std::size_t>(w), "unexpected coverage");
  o.require(worst <= 1e-9, "ramp deviation " + sci(worst) + " bpm > 1e-9");

  HrSeries flat{0, std::vector<double>(5 * w, 64.25)};
  const auto flat_trace = baseline_interpolate(flat, w);
  const std::vector<double> actual(flat_trace.predicted.size(), 64.25);
  const double err = rmse(actual, flat_trace.predicted);
  o.require(err == 0.0, "constant series RMSE " + sci(err));
  o.note("ramp max deviation " + sci(worst) + " bpm, constant-series RMSE exactly 0");
  return o;
}

struct CohortRuns {
  bool ready = false;
  std::string error;
  EvaluationReport personalized;
  EvaluationReport generalized;
  double prep_s = 0.0;
  double personalized_s = 0.0;
  double generalized_s = 0.0;
};

CohortRuns& cohort_runs(bool need_generalized) {
  static CohortRuns runs;
  static std::vector<ParticipantData> participants;
  static bool personalized_done = false;
  try {
    const RunConfig config;  // defaults: 12 participants x 7 days, seed 42
    if (participants.empty()) {
      const auto t0 = Clock::now();
      for (std::size_t i = 0; i < config.simulate.n_participants; ++i) {
        const auto p = generate_participant(config.simulate, i);
        const auto stream = align_streams(p.accel, p.gps, p.hr, p.profile.participant_id);
        participants.push_back(prepare_participant(stream, config.feature_options(stream.participant_id),
                                                   config.stride_s));
      }
      runs.prep_s = seconds_since(t0);
    }
    auto cv = config.cv_config();
    cv.traces = false;
    if (!personalized_done) {
      const auto t0 = Clock::now();
      runs.personalized = run_personalized(participants, config.model_specs(), cv);
      runs.personalized_s = seconds_since(t0);
      personalized_done = true;
    }
    if (need_generalized && runs.generalized.summary.empty()) {
      const auto t0 = Clock::now();
      std::vector<ModelSpec> forest_only = {config.spec(ModelKind::forest)};
      cv.importance = false;
      runs.generalized = run_generalized(participants, forest_only, cv);
      runs.generalized_s = seconds_since(t0);
    }
    runs.ready = true;
  } catch (const std::exception& e) {
    runs.error = e.what();
  }
  return runs;
}

// 6. Personalized ordering on the default synthetic cohort.
Outcome criterion_ordering(double& elapsed) {
  Outcome o;
  auto& runs = cohort_runs(false);
  elapsed = runs.prep_s + runs.personalized_s;
  if (!runs.ready) {
    o.require(false, "evaluation failed: " + runs.error);
    return o;
  }
  const auto& r = runs.personalized;
  const auto& base = r.summary_for(ModelKind::baseline);
  const auto& ridge = r.summary_for(ModelKind::ridge);
  const auto& svr = r.summary_for(ModelKind::svr);
  const auto& forest = r.summary_for(ModelKind::forest);
  o.require(forest.r_squared > ridge.r_squared, "forest R2 " + fmt(forest.r_squared) + " <= ridge " +
                                                    fmt(ridge.r_squared));
  o.require(forest.r_squared > svr.r_squared, "forest R2 " + fmt(forest.r_squared) + " <= svr " +
                                                  fmt(svr.r_squared));
  for (const auto* m : {&ridge, &svr, &forest}) {
    o.require(m->rmse < base.rmse, std::string(to_string(m->model)) + " RMSE " + fmt(m->rmse) +
                                       " >= baseline " + fmt(base.rmse));
  }
  o.note("R2 baseline/ridge/svr/forest " + fmt(base.r_squared, 3) + "/" + fmt(ridge.r_squared, 3) + "/" +
         fmt(svr.r_squared, 3) + "/" + fmt(forest.r_squared, 3) + ", RMSE " + fmt(base.rmse, 2) + "/" +
         fmt(ridge.rmse, 2) + "/" + fmt(svr.rmse, 2) + "/" + fmt(forest.rmse, 2) + " bpm");
  return o;
}

// 7. Personalized forest beats the pooled z-score forest.
Outcome criterion_personalization(double& elapsed) {
  Outcome o;
  auto& runs = cohort_runs(true);
  elapsed = runs.prep_s + runs.generalized_s;
  if (!runs.ready) {
    o.require(false, "evaluation failed: " + runs.error);
    return o;
  }
  const auto& p = runs.personalized.summary_for(ModelKind::forest);
  const auto& g = runs.generalized.summary_for(ModelKind::forest);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < runs.personalized.participants.size(); ++i) {
    const auto prof = synth_profile(SynthConfig{}, i);
    lo = std::min(lo, prof.baseline);
    hi = std::max(hi, prof.baseline);
  }
  o.require(p.r_squared > g.r_squared, "personalized forest R2 " + fmt(p.r_squared) + " <= generalized " +
                                           fmt(g.r_squared));
  o.note("forest R2 personalized " + fmt(p.r_squared) + " vs generalized " + fmt(g.r_squared) +
         ", RMSE " + fmt(p.rmse_bpm, 2) + " vs " + fmt(g.rmse_bpm, 2) + " bpm (re-inverted), baselines " +
         fmt(lo, 1) + "-" + fmt(hi, 1) + " bpm");
  return o;
}

// 8. Importance ordering on a circadian-dominated participant with a noise column.
Outcome criterion_importance() {
  Outcome o;
  SynthConfig cfg;
  cfg.duration_s = 48 * 3600;
  cfg.activity_hr_gain = 10.0;
  cfg.circadian_amplitude = 15.0;
  cfg.noise_std = 2.0;
  cfg.seed = 42;
  const auto p = generate_participant(cfg, 0);
  const auto s = align_streams(p.accel, p.gps, p.hr, p.profile.participant_id);
  const Dataset base = build_feature_matrix(s, TargetKind::bpm, std::nullopt, FeatureOptions{}, 5).design();

  Dataset d;
  d.x.resize(base.x.rows(), base.x.cols() + 1);
  d.x.leftCols(base.x.cols()) = base.x;
  Rng rng(mix_seed(42, 99));
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) d.x(r, base.x.cols()) = uniform_unit(rng);
  d.y = base.y;
  d.feature_names = base.feature_names;
  d.feature_names.push_back("noise");

  const auto forest = forest_train(d, ModelSpec::defaults(ModelKind::forest).forest_params(), 1);
  const auto table = importance_table(forest, d, 42, 1);

  const std::set<std::string> temporal = {"hour", "minute", "second"};
  const std::set<std::string> location = {"lat2", "lon2", "lat1", "lon1", "lat0", "lon0"};
  auto check = [&](const std::vector<double>& scores, const std::string& name) {
    double best_time = -1e300, best_place = -1e300;
    std::string time_name, place_name;
    for (std::size_t f = 0; f < scores.size(); ++f) {
      if (temporal.count(table.features[f]) && scores[f] > best_time) {
        best_time = scores[f];
        time_name = table.features[f];
      }
      if (location.count(table.features[f]) && scores[f] > best_place) {
        best_place = scores[f];
        place_name = table.features[f];
      }
    }
    o.require(best_time > best_place, name + ": best temporal " + time_name + " " + fmt(best_time, 5) +
                                          " <= location " + place_name + " " + fmt(best_place, 5));
    return time_name;
  };
  const auto gain_top = check(table.split_gain, "split gain");
  const auto perm_top = check(table.permutation_raw, "permutation");

  const auto& perm = table.permutation_raw;
  const std::size_t noise = perm.size() - 1;
  const std::size_t last = static_cast<std::size_t>(std::min_element(perm.begin(), perm.end()) - perm.begin());
  o.require(last == noise, "permutation ranks " + table.features[last] + " (" + fmt(perm[last], 5) +
                               ") below noise (" + fmt(perm[noise], 5) + ")");
  o.note(std::to_string(d.rows()) + " rows; top temporal: " + gain_top + " (gain), " + perm_top +
         " (permutation); noise last with " + fmt(perm[noise], 5));
  return o;
}

std::map<std::int64_t, std::string> hr_field_by_second(const fs::path& path) {
  std::ifstream in(path);
  std::map<std::int64_t, std::string> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto fields = csv::split(csv::chomp(line));
    out[grid_second(*csv::parse_int(fields[0]))] = std::string(fields[1]);
  }
  return out;
}

// 9. Gap filling through the command line on held-out days.
Outcome criterion_fill() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "hrfill_acceptance_fill";
  fs::remove_all(root);

  SynthConfig cfg;
  cfg.n_participants = 1;
  cfg.duration_s = 14 * 86400;
  cfg.noise_std = 0.0;
  const auto p = generate_participant(cfg, 0);
  const std::int64_t split_ms = (cfg.start_epoch_s + 7 * 86400) * 1000;
  auto split = [&](const std::vector<SensorRecord>& r, bool late) {
    std::vector<SensorRecord> out;
    for (const auto& rec : r) {
      if ((rec.timestamp_ms >= split_ms) == late) out.push_back(rec);
    }
    return out;
  };
  const auto pid = p.profile.participant_id;
  write_participant_csvs(root / "train" / pid, split(p.accel, false), split(p.gps, false), split(p.hr, false));

  const auto late_hr = split(p.hr, true);
  const std::vector<GapPattern> patterns = {NightlyNonwear{23.0, 8.0}};
  const auto gaps = inject_gaps(late_hr, patterns, 9);
  write_participant_csvs(root / "fill" / pid, split(p.accel, true), split(p.gps, true), gaps.hr);

  std::map<std::int64_t, double> truth;
  for (const auto& r : late_hr) truth[grid_second(r.timestamp_ms)] = std::get<HeartRate>(r.payload).bpm;
  const auto late_stream = align_streams(split(p.accel, true), split(p.gps, true), gaps.hr, pid);

  std::ostringstream out, err;
  int code = cli::run(std::vector<std::string>{"--out", (root / "model").string(), "train", "--data",
                                               (root / "train").string(), "--model", "forest"},
                      out, err);
  o.require(code == 0, "train exited " + std::to_string(code) + ": " + err.str());
  if (code != 0) return o;
  code = cli::run(std::vector<std::string>{"--out", (root / "out").string(), "fill", "--data",
                                           (root / "fill").string(), "--model",
                                           (root / "model" / "model.json").string()},
                  out, err);
  o.require(code == 0, "fill exited " + std::to_string(code) + ": " + err.str());
  if (code != 0) return o;

  const auto observed_text = hr_field_by_second(root / "fill" / pid / "hr.csv");
  std::ifstream filled(root / "out" / "filled.csv");
  std::string line;
  std::getline(filled, line);
  std::size_t rows = 0, byte_mismatch = 0, estimated = 0, unfilled_with_features = 0;
  double sse = 0.0;
  std::size_t k = 0;
  while (std::getline(filled, line)) {
    const auto f = csv::split(line);
    const auto t = *csv::parse_int(f[0]);
    const auto& frame = late_stream.frames.at(k++);
    ++rows;
    if (frame.timestamp_s != t) {
      o.require(false, "row order differs from the aligned grid at " + std::to_string(t));
      break;
    }
    if (frame.hr) {
      const auto it = observed_text.find(t);
      if (f[3] != "observed" || it == observed_text.end() || f[2] != it->second) ++byte_mismatch;
    } else if (frame.accel && frame.gps) {
      if (f[3] != "estimated") {
        ++unfilled_with_features;
        continue;
      }
      ++estimated;
      const double e = *csv::parse_double(f[2]) - truth.at(t);
      sse += e * e;
    }
  }
  const double fill_rmse = estimated ? std::sqrt(sse / static_cast<double>(estimated)) : 1e300;
  o.require(rows == late_stream.frames.size(), "filled.csv has " + std::to_string(rows) + " rows, expected " +
                                                   std::to_string(late_stream.frames.size()));
  o.require(byte_mismatch == 0, std::to_string(byte_mismatch) + " observed seconds changed");
  o.require(unfilled_with_features == 0,
            std::to_string(unfilled_with_features) + " gap seconds with phone features left unfilled");
  o.require(estimated == static_cast<std::size_t>(gaps.mask.covered_seconds()),
            "estimated " + std::to_string(estimated) + " of " + std::to_string(gaps.mask.covered_seconds()) +
                " gap seconds");
  o.require(fill_rmse < 3.0, "gap RMSE " + fmt(fill_rmse, 3) + " bpm >= 3");
  o.note(std::to_string(estimated) + " gap seconds estimated, RMSE " + fmt(fill_rmse, 3) + " bpm; " +
         std::to_string(rows - estimated) + " observed seconds byte-identical");
  fs::remove_all(root);
  return o;
}

// 10. Serialization round trips.
Outcome criterion_round_trips() {
  Outcome o;
  SynthConfig cfg;
  cfg.n_participants = 2;
  cfg.duration_s = 12 * 3600;
  std::vector<AlignedStream> streams;
  std::vector<ParticipantData> participants;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto p = generate_participant(cfg, i);
    streams.push_back(align_streams(p.accel, p.gps, p.hr, p.profile.participant_id));
    participants.push_back(prepare_participant(streams.back(), FeatureOptions{}, 30));
  }

  const Dataset d = participants[0].features.design();
  for (auto kind : {ModelKind::ridge, ModelKind::svr, ModelKind::forest}) {
    const auto model = fit_model(ModelSpec::defaults(kind), d, TargetKind::bpm);
    std::stringstream buf;
    save_model(model, buf);
    const auto back = load_model(buf);
    o.require(same_bits(model.predict(d.x), back.predict(d.x)),
              std::string(to_string(kind)) + " predictions changed after save/load");
  }

  std::vector<ModelSpec> specs;
  for (auto kind : kAllModelKinds) {
    auto spec = ModelSpec::defaults(kind);
    if (kind == ModelKind::forest) spec.n_trees = 20;
    specs.push_back(spec);
  }
  CvConfig cv;
  cv.folds = 3;
  const auto report = run_personalized(participants, specs, cv);
  const fs::path dir = fs::temp_directory_path() / "hrfill_acceptance_report";
  fs::remove_all(dir);
  export_report(report, dir);
  const auto back = load_report(dir / "report.json");
  o.require(back.fold_metrics == report.fold_metrics && back.participant_metrics == report.participant_metrics &&
                back.summary == report.summary,
            "report metrics changed after export/import");
  fs::remove_all(dir);

  std::stringstream aligned;
  write_aligned_csv(aligned, streams);
  o.require(read_aligned_csv(aligned) == streams, "aligned frames changed after write/read");
  o.note("3 models bit-identical, " + std::to_string(report.fold_metrics.size()) +
         " fold metrics identical, " + std::to_string(streams[0].frames.size() + streams[1].frames.size()) +
         " aligned frames identical");
  return o;
}

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0 = no runtime bound
  std::function<Outcome(double&)> run;
};

Outcome timed(const std::function<Outcome()>& fn, double& elapsed) {
  const auto t0 = Clock::now();
  auto o = fn();
  elapsed = seconds_since(t0);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "feature correctness", 1.0, [](double& t) { return timed(criterion_features, t); }},
      {2, "ridge oracle equivalence", 5.0, [](double& t) { return timed(criterion_ridge, t); }},
      {3, "svr kkt validity", 30.0, [](double& t) { return timed(criterion_svr, t); }},
      {4, "forest determinism and bounds", 10.0, [](double& t) { return timed(criterion_forest, t); }},
      {5, "baseline analytic check", 0.0, [](double& t) { return timed(criterion_baseline, t); }},
      {6, "model ordering", 300.0, [](double& t) { return criterion_ordering(t); }},
      {7, "personalized vs generalized", 600.0, [](double& t) { return criterion_personalization(t); }},
      {8, "importance ordering", 120.0, [](double& t) { return timed(criterion_importance, t); }},
      {9, "gap-fill integrity", 180.0, [](double& t) { return timed(criterion_fill, t); }},
      {10, "round-trip stability", 0.0, [](double& t) { return timed(criterion_round_trips, t); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    double elapsed = 0.0;
    Outcome o;
    try {
      o = c.run(elapsed);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    if (c.limit_s > 0.0) {
      o.require(elapsed < c.limit_s, "runtime " + fmt(elapsed, 1) + " s over the " + fmt(c.limit_s, 0) + " s limit");
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), elapsed, c.limit_s > 0.0 ? (", limit " + fmt(c.limit_s, 0) + " s").c_str() : "");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
