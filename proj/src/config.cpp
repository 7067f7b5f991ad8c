#include "hrfill/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "hrfill/error.hpp"
#include "hrfill/parallel.hpp"

namespace hrfill {

using nlohmann::json;

int RunConfig::tz_for(const std::string& participant_id) const {
  const auto it = tz_offsets.find(participant_id);
  return it == tz_offsets.end() ? tz_offset_min : it->second;
}

FeatureOptions RunConfig::feature_options(const std::string& participant_id) const {
  return {deviation, tz_for(participant_id)};
}

ModelSpec RunConfig::spec(ModelKind kind) const {
  switch (kind) {
    case ModelKind::baseline: return baseline;
    case ModelKind::ridge: return ridge;
    case ModelKind::svr: return svr;
    case ModelKind::forest: return forest;
  }
  return forest;
}

std::vector<ModelSpec> RunConfig::model_specs() const {
  std::vector<ModelSpec> out;
  for (auto kind : models) out.push_back(spec(kind));
  return out;
}

CvConfig RunConfig::cv_config() const {
  CvConfig cv;
  cv.folds = folds;
  cv.policy = policy;
  cv.seed = seed;
  cv.svr_max_rows = svr_max_rows;
  cv.importance = importance;
  cv.threads = resolve_threads(threads);
  cv.deviation = deviation;
  return cv;
}

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  forest.seed = value;
  simulate.seed = value;
}

void RunConfig::validate() const {
  if (models.empty()) throw UsageError("config: models must list at least one model");
  std::set<ModelKind> seen;
  for (auto kind : models) {
    if (!seen.insert(kind).second) throw UsageError("config: model '" + std::string(to_string(kind)) + "' listed twice");
  }
  ridge.validate();
  svr.validate();
  forest.validate();
  baseline.validate();
  const auto check_tz = [](int tz, const std::string& what) {
    if (tz < -kMaxTzOffsetMinutes || tz > kMaxTzOffsetMinutes) {
      throw UsageError("config: " + what + " must be in [-840, 840] minutes");
    }
  };
  check_tz(tz_offset_min, "features.tz_offset_min");
  for (const auto& [pid, tz] : tz_offsets) check_tz(tz, "features.tz_offsets." + pid);
  if (stride_s < 1) throw UsageError("config: features.stride_s must be >= 1");
  if (folds < 2) throw UsageError("config: cv.folds must be >= 2");
  simulate.validate();
  for (const auto& g : gaps) validate_gap_pattern(g);
}

namespace {

// Reads known keys from one JSON object and rejects everything else.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UsageError("config: '" + label() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw UsageError("config: '" + field(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& target) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      target.reset();
      return;
    }
    T value{};
    read(key, value);
    target = value;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) throw UsageError("config: unknown key '" + field(item.key().c_str()) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto parse_enum(Section& s, const char* key, Parse parse, auto& target) {
  std::optional<std::string> text;
  s.read_optional(key, text);
  if (text) target = parse(*text);
}

GapPattern gap_from_json(const json& j) {
  Section s(j, "simulate.gaps[]");
  std::string kind;
  s.read("kind", kind);
  GapPattern out;
  if (kind == "random_dropout") {
    RandomDropout g;
    s.read("p", g.p);
    out = g;
  } else if (kind == "nightly_nonwear") {
    NightlyNonwear g;
    s.read("start_hour", g.start_hour);
    s.read("hours", g.hours);
    out = g;
  } else if (kind == "battery") {
    BatteryDepletion g;
    s.read("day", g.day);
    out = g;
  } else {
    throw UsageError("config: gap kind '" + kind + "' is not random_dropout, nightly_nonwear or battery");
  }
  s.finish();
  return out;
}

json gap_to_json(const GapPattern& pattern) {
  return std::visit(
      [](const auto& g) -> json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, RandomDropout>) {
          return {{"kind", "random_dropout"}, {"p", g.p}};
        } else if constexpr (std::is_same_v<G, NightlyNonwear>) {
          return {{"kind", "nightly_nonwear"}, {"start_hour", g.start_hour}, {"hours", g.hours}};
        } else {
          return {{"kind", "battery"}, {"day", g.day}};
        }
      },
      pattern);
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "");
  std::uint64_t seed = c.seed;
  root.read("seed", seed);
  root.read("threads", c.threads);

  if (const auto* m = root.child("models")) {
    if (!m->is_array()) throw UsageError("config: 'models' must be an array of model names");
    c.models.clear();
    for (const auto& name : *m) {
      if (!name.is_string()) throw UsageError("config: 'models' must be an array of model names");
      c.models.push_back(parse_model_kind(name.get<std::string>()));
    }
  }
  if (const auto* r = root.child("ridge")) {
    Section s(*r, "ridge");
    s.read("alpha", c.ridge.alpha);
    s.finish();
  }
  if (const auto* r = root.child("svr")) {
    Section s(*r, "svr");
    s.read("c", c.svr.c);
    s.read("epsilon", c.svr.epsilon);
    s.read_optional("gamma", c.svr.gamma);
    s.read("tolerance", c.svr.svr_tolerance);
    s.read("max_iterations", c.svr.svr_max_iterations);
    s.finish();
  }
  if (const auto* r = root.child("forest")) {
    Section s(*r, "forest");
    s.read("n_trees", c.forest.n_trees);
    s.read_optional("max_depth", c.forest.max_depth);
    s.read("min_leaf", c.forest.min_leaf);
    s.read("bootstrap", c.forest.bootstrap);
    s.read_optional("max_features", c.forest.max_features);
    s.finish();
  }
  if (const auto* r = root.child("baseline")) {
    Section s(*r, "baseline");
    s.read("window_s", c.baseline.baseline_window_s);
    s.finish();
  }
  if (const auto* r = root.child("features")) {
    Section s(*r, "features");
    parse_enum(s, "deviation_mode", parse_deviation_mode, c.deviation);
    s.read("tz_offset_min", c.tz_offset_min);
    s.read("tz_offsets", c.tz_offsets);
    s.read("stride_s", c.stride_s);
    s.finish();
  }
  if (const auto* r = root.child("cv")) {
    Section s(*r, "cv");
    s.read("folds", c.folds);
    parse_enum(s, "policy", parse_fold_policy, c.policy);
    s.read("svr_max_rows", c.svr_max_rows);
    s.read("importance", c.importance);
    s.finish();
  }
  if (const auto* r = root.child("simulate")) {
    Section s(*r, "simulate");
    auto& g = c.simulate;
    s.read("participants", g.n_participants);
    s.read("duration_s", g.duration_s);
    s.read("start_epoch_s", g.start_epoch_s);
    s.read("tz_offset_min", g.tz_offset_min);
    s.read("hr_baseline_min", g.hr_baseline_min);
    s.read("hr_baseline_max", g.hr_baseline_max);
    s.read("circadian_amplitude", g.circadian_amplitude);
    s.read("circadian_phase_jitter_h", g.circadian_phase_jitter_h);
    s.read("activity_rate", g.activity_rate);
    s.read("activity_hr_gain", g.activity_hr_gain);
    s.read("activity_smoothing_s", g.activity_smoothing_s);
    s.read("response_jitter", g.response_jitter);
    s.read("noise_std", g.noise_std);
    s.read("noise_correlation_s", g.noise_correlation_s);
    if (const auto* gaps = s.child("gaps")) {
      if (!gaps->is_array()) throw UsageError("config: 'simulate.gaps' must be an array");
      c.gaps.clear();
      for (const auto& item : *gaps) c.gaps.push_back(gap_from_json(item));
    }
    s.finish();
  }
  if (const auto* r = root.child("paths")) {
    Section s(*r, "paths");
    s.read_optional("data_dir", c.data_dir);
    s.read("out_dir", c.out_dir);
    s.finish();
  }
  root.finish();
  c.set_seed(seed);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::string run_config_json(const RunConfig& c) {
  json models = json::array();
  for (auto kind : c.models) models.push_back(to_string(kind));
  json gaps = json::array();
  for (const auto& g : c.gaps) gaps.push_back(gap_to_json(g));
  const auto& g = c.simulate;
  json j = {
      {"seed", c.seed},
      {"threads", c.threads},
      {"models", models},
      {"ridge", {{"alpha", c.ridge.alpha}}},
      {"svr",
       {{"c", c.svr.c},
        {"epsilon", c.svr.epsilon},
        {"gamma", optional_json(c.svr.gamma)},
        {"tolerance", c.svr.svr_tolerance},
        {"max_iterations", c.svr.svr_max_iterations}}},
      {"forest",
       {{"n_trees", c.forest.n_trees},
        {"max_depth", optional_json(c.forest.max_depth)},
        {"min_leaf", c.forest.min_leaf},
        {"bootstrap", c.forest.bootstrap},
        {"max_features", optional_json(c.forest.max_features)}}},
      {"baseline", {{"window_s", c.baseline.baseline_window_s}}},
      {"features",
       {{"deviation_mode", to_string(c.deviation)},
        {"tz_offset_min", c.tz_offset_min},
        {"tz_offsets", c.tz_offsets},
        {"stride_s", c.stride_s}}},
      {"cv",
       {{"folds", c.folds},
        {"policy", to_string(c.policy)},
        {"svr_max_rows", c.svr_max_rows},
        {"importance", c.importance}}},
      {"simulate",
       {{"participants", g.n_participants},
        {"duration_s", g.duration_s},
        {"start_epoch_s", g.start_epoch_s},
        {"tz_offset_min", g.tz_offset_min},
        {"hr_baseline_min", g.hr_baseline_min},
        {"hr_baseline_max", g.hr_baseline_max},
        {"circadian_amplitude", g.circadian_amplitude},
        {"circadian_phase_jitter_h", g.circadian_phase_jitter_h},
        {"activity_rate", g.activity_rate},
        {"activity_hr_gain", g.activity_hr_gain},
        {"activity_smoothing_s", g.activity_smoothing_s},
        {"response_jitter", g.response_jitter},
        {"noise_std", g.noise_std},
        {"noise_correlation_s", g.noise_correlation_s},
        {"gaps", gaps}}},
      {"paths", {{"data_dir", optional_json(c.data_dir)}, {"out_dir", c.out_dir}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace hrfill
