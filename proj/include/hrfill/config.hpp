#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hrfill/evaluate.hpp"
#include "hrfill/features.hpp"
#include "hrfill/model.hpp"
#include "hrfill/synthgen.hpp"

namespace hrfill {

/// Everything the command-line tool reads from its JSON config file. Keys
/// missing from the file keep the defaults below; unknown keys are errors.
struct RunConfig {
  std::uint64_t seed = 42;  // models, folds and the generator all derive from it
  std::size_t threads = 1;  // 0 = all hardware threads

  std::vector<ModelKind> models{kAllModelKinds.begin(), kAllModelKinds.end()};
  ModelSpec ridge = ModelSpec::defaults(ModelKind::ridge);
  ModelSpec svr = ModelSpec::defaults(ModelKind::svr);
  ModelSpec forest = ModelSpec::defaults(ModelKind::forest);
  ModelSpec baseline = ModelSpec::defaults(ModelKind::baseline);

  DeviationMode deviation = DeviationMode::all;
  int tz_offset_min = 0;
  std::map<std::string, int> tz_offsets;  // per-participant overrides
  std::int64_t stride_s = 60;             // feature rows kept every stride_s seconds for training

  std::size_t folds = 5;
  FoldPolicy policy = FoldPolicy::shuffled;
  std::size_t svr_max_rows = 2000;
  bool importance = true;

  SynthConfig simulate;
  std::vector<GapPattern> gaps;

  std::optional<std::string> data_dir;
  std::string out_dir = "out";

  int tz_for(const std::string& participant_id) const;
  FeatureOptions feature_options(const std::string& participant_id) const;
  ModelSpec spec(ModelKind kind) const;
  std::vector<ModelSpec> model_specs() const;
  CvConfig cv_config() const;
  /// Replaces the master seed everywhere it is used.
  void set_seed(std::uint64_t value);
  /// Throws UsageError on the first invalid value.
  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Complete configuration, every default spelled out.
std::string run_config_json(const RunConfig& config);

}  // namespace hrfill
