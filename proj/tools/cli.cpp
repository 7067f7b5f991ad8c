#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "hrfill/config.hpp"
#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"
#include "hrfill/evaluate.hpp"
#include "hrfill/importance.hpp"
#include "hrfill/ingest.hpp"
#include "hrfill/model.hpp"
#include "hrfill/parallel.hpp"
#include "hrfill/random.hpp"
#include "hrfill/synthgen.hpp"

namespace fs = std::filesystem;

namespace hrfill::cli {

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::optional<std::string> data;
};

RunConfig resolve_config(const Common& c) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (c.seed) config.set_seed(*c.seed);
  if (c.threads) config.threads = *c.threads;
  if (c.out) config.out_dir = *c.out;
  if (c.data) config.data_dir = *c.data;
  config.validate();
  return config;
}

fs::path require_data_dir(const RunConfig& config) {
  if (!config.data_dir) throw UsageError("no input data: pass --data or set paths.data_dir in the config");
  const fs::path path(*config.data_dir);
  if (!fs::exists(path)) throw DataError("input " + path.string() + " does not exist");
  return path;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

bool has_raw_channels(const fs::path& dir) {
  return fs::exists(dir / "accel.csv") || fs::exists(dir / "gps.csv") || fs::exists(dir / "hr.csv");
}

AlignedStream load_raw_participant(const fs::path& dir, const std::string& participant_id, std::ostream& err) {
  const auto parse = [&](const char* name, Channel channel) {
    const fs::path path = dir / name;
    if (!fs::exists(path)) throw DataError("participant '" + participant_id + "' is missing " + path.string());
    auto result = parse_channel_file(path, channel);
    if (!result.malformed.empty()) {
      err << "warning: " << path.string() << ": " << result.malformed.size() << " of " << result.data_rows
          << " rows rejected (first: line " << result.malformed.front().line << ", "
          << result.malformed.front().reason << ")\n";
    }
    return std::move(result.records);
  };
  const auto accel = parse("accel.csv", Channel::accel);
  const auto gps = parse("gps.csv", Channel::gps);
  const auto hr = parse("hr.csv", Channel::hr);
  return align_streams(accel, gps, hr, participant_id);
}

// Accepts an aligned CSV file, a directory holding aligned.csv, a directory
// with accel.csv/gps.csv/hr.csv, or a directory of such per-participant
// directories (participant id = directory name).
std::vector<AlignedStream> load_streams(const fs::path& input, std::ostream& err) {
  if (fs::is_regular_file(input)) return read_aligned_csv_file(input);
  if (!fs::is_directory(input)) throw DataError(input.string() + " is neither a file nor a directory");
  if (fs::exists(input / "aligned.csv")) return read_aligned_csv_file(input / "aligned.csv");
  if (has_raw_channels(input)) {
    std::vector<AlignedStream> one;
    one.push_back(load_raw_participant(input, input.filename().string(), err));
    return one;
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_directory() && has_raw_channels(entry.path())) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError("no participant data (accel.csv, gps.csv, hr.csv) found under " + input.string());
  std::vector<AlignedStream> streams;
  for (const auto& d : dirs) streams.push_back(load_raw_participant(d, d.filename().string(), err));
  return streams;
}

std::vector<ParticipantData> prepare_all(const std::vector<AlignedStream>& streams, const RunConfig& config) {
  std::vector<ParticipantData> out;
  for (const auto& s : streams) out.push_back(prepare_participant(s, config.feature_options(s.participant_id), config.stride_s));
  return out;
}

int cmd_simulate(const RunConfig& config, std::optional<std::size_t> participants, std::optional<double> days,
                 std::ostream& out) {
  SynthConfig synth = config.simulate;
  if (participants) synth.n_participants = *participants;
  if (days) synth.duration_s = static_cast<std::int64_t>(std::llround(*days * 86400.0));
  synth.validate();
  const fs::path root(config.out_dir);
  std::vector<SynthParticipant> generated(synth.n_participants);
  for (std::size_t i = 0; i < synth.n_participants; ++i) {
    auto p = generate_participant(synth, i);
    const fs::path dir = root / p.profile.participant_id;
    std::size_t removed = 0;
    if (!config.gaps.empty()) {
      auto gaps = inject_gaps(p.hr, config.gaps, mix_seed(synth.seed, i, 0x6761), synth.tz_offset_min);
      removed = p.hr.size() - gaps.hr.size();
      p.hr = std::move(gaps.hr);
      auto mask_out = open_output(dir / "gaps.csv");
      mask_out << "start_s,end_s\n";
      for (const auto& g : gaps.mask.intervals) mask_out << g.start_s << ',' << g.end_s << '\n';
    }
    write_participant_csvs(dir, p.accel, p.gps, p.hr);
    out << p.profile.participant_id << ": " << p.accel.size() << " accel, " << p.gps.size() << " gps, " << p.hr.size()
        << " hr rows (" << removed << " removed by gaps, " << p.clamp_events << " clamped) -> " << dir.string()
        << '\n';
  }
  return kOk;
}

int cmd_align(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto streams = load_streams(require_data_dir(config), err);
  const fs::path path = fs::path(config.out_dir) / "aligned.csv";
  auto file = open_output(path);
  write_aligned_csv(file, streams);
  std::size_t frames = 0;
  for (const auto& s : streams) frames += s.frames.size();
  out << "aligned " << streams.size() << " participant(s), " << frames << " frames -> " << path.string() << '\n';
  return kOk;
}

int cmd_featurize(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto streams = load_streams(require_data_dir(config), err);
  FeatureMatrix all;
  for (const auto& s : streams) {
    all.append(build_feature_matrix(s, TargetKind::bpm, std::nullopt, config.feature_options(s.participant_id),
                                    config.stride_s));
  }
  const fs::path path = fs::path(config.out_dir) / "features.csv";
  auto file = open_output(path);
  write_feature_csv(file, all);
  out << "wrote " << all.size() << " feature rows -> " << path.string() << '\n';
  return kOk;
}

int cmd_train(const RunConfig& config, const std::string& kind_text, const std::string& target_text,
              const std::optional<std::string>& model_out, std::ostream& out, std::ostream& err) {
  const ModelKind kind = parse_model_kind(kind_text);
  const TargetKind target = parse_target_kind(target_text);
  const auto streams = load_streams(require_data_dir(config), err);

  FeatureMatrix pooled;
  for (const auto& s : streams) {
    std::optional<ZScoreParams> zs;
    if (target == TargetKind::zscore) {
      std::vector<double> bpm;
      for (const auto& f : s.frames) {
        if (f.hr) bpm.push_back(*f.hr);
      }
      zs = zscore_fit(bpm);
    }
    pooled.append(build_feature_matrix(s, target, zs, config.feature_options(s.participant_id), config.stride_s));
  }
  Dataset data = pooled.design();
  if (kind == ModelKind::svr) data = data.subset(subsample_rows(data.rows(), config.svr_max_rows, config.seed));
  const auto model = fit_model(config.spec(kind), data, target, config.deviation, resolve_threads(config.threads));
  const fs::path path = model_out ? fs::path(*model_out) : fs::path(config.out_dir) / "model.json";
  auto file = open_output(path);
  save_model(model, file);
  out << "trained " << to_string(kind) << " on " << data.rows() << " rows (" << streams.size()
      << " participant(s), target " << to_string(target) << ") -> " << path.string() << '\n';
  return kOk;
}

int cmd_evaluate(const RunConfig& config, const std::string& mode_text, std::ostream& out, std::ostream& err) {
  const EvalMode mode = parse_eval_mode(mode_text);
  const auto streams = load_streams(require_data_dir(config), err);
  if (mode == EvalMode::generalized && streams.size() < 2) {
    throw UsageError("generalized mode pools participants and needs at least 2; found " +
                     std::to_string(streams.size()) + " (use --mode personalized)");
  }
  const auto participants = prepare_all(streams, config);
  const auto specs = config.model_specs();
  const auto cv = config.cv_config();
  const auto report =
      mode == EvalMode::personalized ? run_personalized(participants, specs, cv) : run_generalized(participants, specs, cv);
  export_report(report, config.out_dir);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  write_summary(report, out);
  return kOk;
}

int cmd_importance(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto streams = load_streams(require_data_dir(config), err);
  const auto participants = prepare_all(streams, config);
  const std::size_t threads = resolve_threads(config.threads);
  std::vector<ImportanceTable> tables;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const Dataset data = participants[i].features.design();
    const auto model = fit_model(config.forest, data, TargetKind::bpm, config.deviation, threads);
    tables.push_back(importance_table(std::get<ForestState>(model.state), data, mix_seed(config.seed, i), threads));
  }
  const auto table = average_importance(tables);
  const fs::path path = fs::path(config.out_dir) / "importance.csv";
  auto file = open_output(path);
  file << "feature,split_gain,permutation,permutation_raw,permutation_spread\n";
  out << std::left << std::setw(11) << "feature" << std::right << std::setw(12) << "split_gain" << std::setw(14)
      << "permutation" << '\n';
  for (std::size_t f = 0; f < table.features.size(); ++f) {
    file << table.features[f] << ',' << csv::format_double(table.split_gain[f]) << ','
         << csv::format_double(table.permutation[f]) << ',' << csv::format_double(table.permutation_raw[f]) << ','
         << csv::format_double(table.permutation_spread[f]) << '\n';
    out << std::left << std::setw(11) << table.features[f] << std::right << std::fixed << std::setprecision(4)
        << std::setw(12) << table.split_gain[f] << std::setw(14) << table.permutation[f] << '\n';
  }
  out << "averaged over " << participants.size() << " participant forest(s) -> " << path.string() << '\n';
  return kOk;
}

int cmd_fill(const RunConfig& config, const std::string& model_path, const std::optional<std::string>& fill_out,
             std::ostream& out, std::ostream& err) {
  const auto model = load_model(fs::path(model_path));
  if (std::holds_alternative<BaselineState>(model.state)) {
    throw UsageError("fill needs a feature-based model (ridge, svr or forest), not the baseline");
  }
  if (model.feature_names != feature_names()) {
    throw DataError("model feature schema does not match the standard feature rows");
  }
  const auto streams = load_streams(require_data_dir(config), err);
  const fs::path path = fill_out ? fs::path(*fill_out) : fs::path(config.out_dir) / "filled.csv";
  auto file = open_output(path);
  file << "timestamp_s,participant_id,bpm,provenance\n";

  std::size_t observed = 0, estimated = 0, missing = 0;
  for (const auto& s : streams) {
    std::optional<ZScoreParams> zs;
    if (model.target_kind == TargetKind::zscore) {
      std::vector<double> bpm;
      for (const auto& f : s.frames) {
        if (f.hr) bpm.push_back(*f.hr);
      }
      zs = zscore_fit(bpm);
    }
    const FeatureOptions options{model.deviation, config.tz_for(s.participant_id)};
    std::vector<FeatureRow> rows;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      const auto& f = s.frames[i];
      if (!f.hr && f.accel && f.gps) {
        rows.push_back(make_feature_row(f.timestamp_s, *f.accel, *f.gps, options));
        where.push_back(i);
      }
    }
    const auto pred = model.predict(rows);
    std::vector<double> filled(s.frames.size(), std::nan(""));
    for (std::size_t k = 0; k < where.size(); ++k) {
      filled[where[k]] = zs ? zscore_invert(pred[k], *zs) : pred[k];
    }
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      const auto& f = s.frames[i];
      file << f.timestamp_s << ',' << s.participant_id << ',';
      if (f.hr) {
        file << csv::format_double(*f.hr) << ",observed\n";
        ++observed;
      } else if (!std::isnan(filled[i])) {
        file << csv::format_double(filled[i]) << ",estimated\n";
        ++estimated;
      } else {
        file << ",missing\n";
        ++missing;
      }
    }
  }
  if (!file) throw DataError("failed writing " + path.string());
  out << "observed " << observed << ", estimated " << estimated << ", left empty " << missing
      << " (gap seconds without accelerometer and GPS) -> " << path.string() << '\n';
  return kOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heart-rate estimation and gap filling from phone sensor data", "hrfill"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path, "JSON config file (see `config print-defaults`)");
  app.add_option("--seed", common.seed, "Master seed for models, folds and the generator");
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores); results do not depend on it");
  app.add_option("--out", common.out, "Output directory");

  std::optional<std::size_t> participants;
  std::optional<double> days;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort as per-participant CSV files");
  simulate->add_option("--participants", participants, "Number of participants");
  simulate->add_option("--days", days, "Duration in days");

  auto* align = app.add_subcommand("align", "Put raw channel CSVs on the 1 Hz grid and write aligned.csv");
  auto* featurize = app.add_subcommand("featurize", "Write the feature matrix (features.csv)");

  std::string model_kind = "forest";
  std::string target = "bpm";
  std::optional<std::string> model_out;
  auto* train = app.add_subcommand("train", "Fit one model on all participants and save it");
  train->add_option("--model", model_kind, "ridge, svr or forest")->capture_default_str();
  train->add_option("--target", target, "bpm or zscore")->capture_default_str();
  train->add_option("--model-out", model_out, "Model file (default <out>/model.json)");

  std::string mode = "personalized";
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate every model and write the report");
  evaluate->add_option("--mode", mode, "personalized or generalized")->capture_default_str();

  auto* importance = app.add_subcommand("importance", "Random-forest feature importance per participant, averaged");

  std::string model_path;
  std::optional<std::string> fill_out;
  auto* fill = app.add_subcommand("fill", "Fill heart-rate gaps with model estimates");
  fill->add_option("--model", model_path, "Model file from `train`")->required();
  fill->add_option("--fill-out", fill_out, "Output CSV (default <out>/filled.csv)");

  for (auto* sub : {align, featurize, train, evaluate, importance, fill}) {
    sub->add_option("--data", common.data, "Aligned CSV, or directory of per-participant raw CSVs");
  }

  auto* config_cmd = app.add_subcommand("config", "Configuration helpers");
  config_cmd->require_subcommand(1);
  auto* print_defaults = config_cmd->add_subcommand("print-defaults", "Print the full default configuration");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (print_defaults->parsed()) {
      out << run_config_json(resolve_config(common));
      return kOk;
    }
    const RunConfig config = resolve_config(common);
    if (simulate->parsed()) return cmd_simulate(config, participants, days, out);
    if (align->parsed()) return cmd_align(config, out, err);
    if (featurize->parsed()) return cmd_featurize(config, out, err);
    if (train->parsed()) return cmd_train(config, model_kind, target, model_out, out, err);
    if (evaluate->parsed()) return cmd_evaluate(config, mode, out, err);
    if (importance->parsed()) return cmd_importance(config, out, err);
    if (fill->parsed()) return cmd_fill(config, model_path, fill_out, out, err);
    err << "error: no command given\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace hrfill::cli
