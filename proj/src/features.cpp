#include "hrfill/features.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"

namespace hrfill {

std::string_view to_string(DeviationMode mode) {
  switch (mode) {
    case DeviationMode::none: return "none";
    case DeviationMode::magnitude: return "magnitude";
    case DeviationMode::all: return "all";
  }
  return "?";
}

std::string_view to_string(TargetKind kind) { return kind == TargetKind::bpm ? "bpm" : "zscore"; }

DeviationMode parse_deviation_mode(std::string_view text) {
  if (text == "none") return DeviationMode::none;
  if (text == "magnitude") return DeviationMode::magnitude;
  if (text == "all") return DeviationMode::all;
  throw UsageError("unknown deviation mode '" + std::string(text) + "' (none|magnitude|all)");
}

TargetKind parse_target_kind(std::string_view text) {
  if (text == "bpm") return TargetKind::bpm;
  if (text == "zscore") return TargetKind::zscore;
  throw UsageError("unknown target kind '" + std::string(text) + "' (bpm|zscore)");
}

std::vector<std::string> feature_names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

std::array<double, kFeatureCount> FeatureRow::values() const {
  return {x,    y,    z,    magnitude, lat2, lon2, lat1, lon1, lat0, lon0,
          static_cast<double>(hour), static_cast<double>(minute), static_cast<double>(second)};
}

double accel_magnitude(double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); }

double deviation_transform(double value) { return std::abs(value - 1.0); }

double round_coordinate(double value, int decimals) {
  if (decimals < 0 || decimals > 2) throw UsageError("round_coordinate: decimals must be 0, 1 or 2");
  if (!std::isfinite(value) || std::abs(value) >= 1e15) return value;

  // Work on the shortest fixed-notation decimal string so that ties such as
  // -78.55 round the way they read, not the way the binary value falls.
  std::array<char, 400> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::abs(value),
                                       std::chars_format::fixed);
  const std::string_view text(buf.data(), static_cast<std::size_t>(end - buf.data()));
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view fraction = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);

  std::int64_t kept = 0;
  for (char c : whole) kept = kept * 10 + (c - '0');
  for (int i = 0; i < decimals; ++i) {
    const auto k = static_cast<std::size_t>(i);
    kept = kept * 10 + (k < fraction.size() ? fraction[k] - '0' : 0);
  }
  const auto next = static_cast<std::size_t>(decimals);
  if (next < fraction.size() && fraction[next] >= '5') ++kept;

  static constexpr std::array<double, 3> kScale = {1.0, 10.0, 100.0};
  const double magnitude = static_cast<double>(kept) / kScale[static_cast<std::size_t>(decimals)];
  return std::signbit(value) ? -magnitude : magnitude;
}

ClockTime time_components(std::int64_t epoch_s, int tz_offset_min) {
  if (tz_offset_min < -kMaxTzOffsetMinutes || tz_offset_min > kMaxTzOffsetMinutes) {
    throw UsageError("timezone offset must be within [-840, 840] minutes");
  }
  std::int64_t local = (epoch_s + static_cast<std::int64_t>(tz_offset_min) * 60) % 86400;
  if (local < 0) local += 86400;
  return {static_cast<int>(local / 3600), static_cast<int>((local / 60) % 60), static_cast<int>(local % 60)};
}

ZScoreParams zscore_fit(std::span<const double> bpm) {
  if (bpm.size() < 2) throw DataError("z-score needs at least two heart-rate values");
  double sum = 0.0;
  for (double v : bpm) sum += v;
  const double mean = sum / static_cast<double>(bpm.size());
  double ss = 0.0;
  for (double v : bpm) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(bpm.size()));
  if (!(sd >= kMinZScoreStd)) throw DataError("z-score undefined: heart-rate series is constant");
  return {mean, sd};
}

double zscore_apply(double bpm, const ZScoreParams& params) { return (bpm - params.mean) / params.std; }

double zscore_invert(double z, const ZScoreParams& params) { return z * params.std + params.mean; }

FeatureRow make_feature_row(std::int64_t timestamp_s, const Accel& accel, const Gps& gps,
                            const FeatureOptions& options) {
  FeatureRow row;
  row.x = accel.x;
  row.y = accel.y;
  row.z = accel.z;
  row.magnitude = accel_magnitude(accel.x, accel.y, accel.z);
  switch (options.deviation) {
    case DeviationMode::none: break;
    case DeviationMode::all:
      row.x = deviation_transform(row.x);
      row.y = deviation_transform(row.y);
      row.z = deviation_transform(row.z);
      [[fallthrough]];
    case DeviationMode::magnitude: row.magnitude = deviation_transform(row.magnitude); break;
  }

  // Successive roundings, so the coarser precisions are always roundings of
  // the finer ones.
  row.lat2 = round_coordinate(gps.lat, 2);
  row.lon2 = round_coordinate(gps.lon, 2);
  row.lat1 = round_coordinate(row.lat2, 1);
  row.lon1 = round_coordinate(row.lon2, 1);
  row.lat0 = round_coordinate(row.lat1, 0);
  row.lon0 = round_coordinate(row.lon1, 0);

  const auto clock = time_components(timestamp_s, options.tz_offset_min);
  row.hour = clock.hour;
  row.minute = clock.minute;
  row.second = clock.second;
  return row;
}

Dataset FeatureMatrix::design() const {
  Dataset data;
  data.feature_names = feature_names();
  const auto n = static_cast<Eigen::Index>(rows.size());
  data.x.resize(n, static_cast<Eigen::Index>(kFeatureCount));
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = rows[static_cast<std::size_t>(i)].values();
    for (std::size_t j = 0; j < kFeatureCount; ++j) data.x(i, static_cast<Eigen::Index>(j)) = v[j];
    data.y(i) = target[static_cast<std::size_t>(i)];
  }
  return data;
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> positions) const {
  FeatureMatrix out;
  out.target_kind = target_kind;
  out.rows.reserve(positions.size());
  out.target.reserve(positions.size());
  out.participant_ids.reserve(positions.size());
  out.timestamps.reserve(positions.size());
  for (auto p : positions) {
    out.rows.push_back(rows[p]);
    out.target.push_back(target[p]);
    out.participant_ids.push_back(participant_ids[p]);
    out.timestamps.push_back(timestamps[p]);
  }
  return out;
}

void FeatureMatrix::append(const FeatureMatrix& other) {
  if (!empty() && other.target_kind != target_kind) {
    throw UsageError("cannot append feature matrices with different target kinds");
  }
  if (empty()) target_kind = other.target_kind;
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  target.insert(target.end(), other.target.begin(), other.target.end());
  participant_ids.insert(participant_ids.end(), other.participant_ids.begin(), other.participant_ids.end());
  timestamps.insert(timestamps.end(), other.timestamps.begin(), other.timestamps.end());
}

bool is_complete_case(const AlignedFrame& frame) {
  return frame.accel.has_value() && frame.gps.has_value() && frame.hr.has_value();
}

FeatureMatrix build_feature_matrix(const AlignedStream& stream, TargetKind target_kind,
                                   const std::optional<ZScoreParams>& zscore,
                                   const FeatureOptions& options) {
  return build_feature_matrix(stream, target_kind, zscore, options, 1);
}

FeatureMatrix build_feature_matrix(const AlignedStream& stream, TargetKind target_kind,
                                   const std::optional<ZScoreParams>& zscore,
                                   const FeatureOptions& options, std::int64_t stride_s) {
  if (stride_s < 1) throw UsageError("row stride must be at least 1 second");
  if (target_kind == TargetKind::zscore && !zscore) {
    throw UsageError("z-score target requires z-score parameters for participant '" + stream.participant_id + "'");
  }
  FeatureMatrix m;
  m.target_kind = target_kind;
  if (stream.frames.empty()) throw DataError("participant '" + stream.participant_id + "' has no frames");
  const std::int64_t origin = stream.frames.front().timestamp_s;
  for (const auto& f : stream.frames) {
    if (!is_complete_case(f)) continue;
    if ((f.timestamp_s - origin) % stride_s != 0) continue;
    m.rows.push_back(make_feature_row(f.timestamp_s, *f.accel, *f.gps, options));
    m.target.push_back(target_kind == TargetKind::zscore ? zscore_apply(*f.hr, *zscore) : *f.hr);
    m.participant_ids.push_back(stream.participant_id);
    m.timestamps.push_back(f.timestamp_s);
  }
  if (m.empty()) {
    throw DataError("participant '" + stream.participant_id +
                    "' has no complete-case rows (accel, GPS and heart rate all present)");
  }
  return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
  out << kFeatureCsvHeader << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto& r = matrix.rows[i];
    const auto values = r.values();
    out << matrix.participant_ids[i];
    for (std::size_t j = 0; j < 10; ++j) out << ',' << csv::format_double(values[j]);
    out << ',' << r.hour << ',' << r.minute << ',' << r.second << ',' << csv::format_double(matrix.target[i])
        << ',' << to_string(matrix.target_kind) << '\n';
  }
}

}  // namespace hrfill
