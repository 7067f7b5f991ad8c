#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrfill/dataset.hpp"
#include "hrfill/ingest.hpp"

namespace hrfill {

/// Which accelerometer features are replaced by their distance from 1 g.
enum class DeviationMode { none, magnitude, all };

enum class TargetKind { bpm, zscore };

std::string_view to_string(DeviationMode mode);
std::string_view to_string(TargetKind kind);
DeviationMode parse_deviation_mode(std::string_view text);
TargetKind parse_target_kind(std::string_view text);

inline constexpr std::size_t kFeatureCount = 13;

/// Column order of the design matrix: accelerometer, location at 2/1/0
/// decimals, then clock time.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "x",    "y",    "z",    "magnitude", "lat2", "lon2",  "lat1",
    "lon1", "lat0", "lon0", "hour",      "minute", "second"};

std::vector<std::string> feature_names();

struct FeatureRow {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double magnitude = 0.0;
  double lat2 = 0.0;
  double lon2 = 0.0;
  double lat1 = 0.0;
  double lon1 = 0.0;
  double lat0 = 0.0;
  double lon0 = 0.0;
  int hour = 0;
  int minute = 0;
  int second = 0;

  std::array<double, kFeatureCount> values() const;
  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// Euclidean norm of the acceleration vector.
double accel_magnitude(double x, double y, double z);

/// |value - 1|: distance from the reading of a phone at rest.
double deviation_transform(double value);

/// Half-away-from-zero rounding of the decimal representation of `value`
/// (the shortest round-tripping one) to 0, 1 or 2 decimals.
double round_coordinate(double value, int decimals);

struct ClockTime {
  int hour = 0;
  int minute = 0;
  int second = 0;
  friend bool operator==(const ClockTime&, const ClockTime&) = default;
};

inline constexpr int kMaxTzOffsetMinutes = 840;

/// Local clock time of an epoch second at a fixed UTC offset (minutes).
ClockTime time_components(std::int64_t epoch_s, int tz_offset_min);

struct ZScoreParams {
  double mean = 0.0;
  double std = 1.0;
  friend bool operator==(const ZScoreParams&, const ZScoreParams&) = default;
};

inline constexpr double kMinZScoreStd = 1e-9;

/// Mean and population standard deviation. Throws DataError on fewer than two
/// values or a (near-)constant series.
ZScoreParams zscore_fit(std::span<const double> bpm);
double zscore_apply(double bpm, const ZScoreParams& params);
double zscore_invert(double z, const ZScoreParams& params);

struct FeatureOptions {
  DeviationMode deviation = DeviationMode::all;
  int tz_offset_min = 0;
};

/// Feature row for a frame that has both accelerometer and GPS.
FeatureRow make_feature_row(std::int64_t timestamp_s, const Accel& accel, const Gps& gps,
                            const FeatureOptions& options);

/// Feature rows plus targets. One row per complete-case second.
struct FeatureMatrix {
  std::vector<FeatureRow> rows;
  std::vector<double> target;
  std::vector<std::string> participant_ids;
  std::vector<std::int64_t> timestamps;
  TargetKind target_kind = TargetKind::bpm;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// Design matrix (n x 13) and target vector.
  Dataset design() const;
  /// Rows at the given positions, in the given order.
  FeatureMatrix subset(std::span<const std::size_t> positions) const;
  void append(const FeatureMatrix& other);
};

bool is_complete_case(const AlignedFrame& frame);

/// One row per frame with accel, GPS and HR all present. With
/// TargetKind::zscore the bpm target is standardized with `zscore`, which
/// must then be supplied. Throws DataError when no complete-case row exists.
FeatureMatrix build_feature_matrix(const AlignedStream& stream, TargetKind target_kind,
                                   const std::optional<ZScoreParams>& zscore,
                                   const FeatureOptions& options);

/// Same, restricted to frames whose offset from the first frame is a
/// multiple of `stride_s` (1 keeps every complete-case second).
FeatureMatrix build_feature_matrix(const AlignedStream& stream, TargetKind target_kind,
                                   const std::optional<ZScoreParams>& zscore,
                                   const FeatureOptions& options, std::int64_t stride_s);

inline constexpr std::string_view kFeatureCsvHeader =
    "participant_id,x,y,z,magnitude,lat2,lon2,lat1,lon1,lat0,lon0,hour,minute,second,target,target_kind";

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);

}  // namespace hrfill
