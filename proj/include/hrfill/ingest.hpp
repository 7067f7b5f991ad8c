#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hrfill {

enum class Channel { accel, gps, hr };

std::string_view to_string(Channel channel);

/// Acceleration in g along the phone axes.
struct Accel {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Accel&, const Accel&) = default;
};

/// Decimal degrees.
struct Gps {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const Gps&, const Gps&) = default;
};

struct HeartRate {
  double bpm = 0.0;
  friend bool operator==(const HeartRate&, const HeartRate&) = default;
};

inline constexpr double kMinBpm = 20.0;
inline constexpr double kMaxBpm = 250.0;

/// One timestamped reading from one channel.
struct SensorRecord {
  std::int64_t timestamp_ms = 0;
  std::variant<Accel, Gps, HeartRate> payload;
  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

/// Why a record violates the value-range rules, or nullopt if it is valid.
std::optional<std::string> validate_record(const SensorRecord& record);

struct RowIssue {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ParseResult {
  std::vector<SensorRecord> records;  // sorted by timestamp (stable)
  std::size_t data_rows = 0;          // non-empty rows after the header
  std::vector<RowIssue> malformed;    // rejected rows, with reasons
};

/// Header line expected for each channel's CSV file.
std::string_view channel_header(Channel channel);

/// Parses one channel CSV. Malformed or out-of-range rows are collected in
/// `malformed`; more than half of the rows being malformed is treated as a
/// schema error and throws DataError, as do a missing or wrong header.
ParseResult parse_channel(std::istream& in, Channel channel, std::string_view source = "<stream>");
ParseResult parse_channel_file(const std::filesystem::path& path, Channel channel);

void write_channel_csv(std::ostream& out, Channel channel, std::span<const SensorRecord> records);

/// One second of the unified 1 Hz grid.
struct AlignedFrame {
  std::int64_t timestamp_s = 0;
  std::optional<Accel> accel;
  std::optional<Gps> gps;
  std::optional<double> hr;
  friend bool operator==(const AlignedFrame&, const AlignedFrame&) = default;
};

/// A participant's aligned frames. The participant id is held once per
/// stream rather than per frame; a week at 1 Hz is ~600k frames.
struct AlignedStream {
  std::string participant_id;
  std::vector<AlignedFrame> frames;
  friend bool operator==(const AlignedStream&, const AlignedStream&) = default;
};

/// Grid second a millisecond timestamp belongs to: nearest second, with an
/// exact half-second going to the earlier second.
std::int64_t grid_second(std::int64_t timestamp_ms);

inline constexpr std::int64_t kNearestWindowMs = 500;
inline constexpr std::int64_t kGpsHoldSeconds = 60;

/// Puts the three channels on one 1 Hz grid spanning the earliest to the
/// latest record. Accel and HR take the nearest sample within 0.5 s (ties to
/// the earlier sample); GPS carries each fix forward for 60 s.
AlignedStream align_streams(std::span<const SensorRecord> accel, std::span<const SensorRecord> gps,
                            std::span<const SensorRecord> hr, std::string participant_id);

/// Inclusive range of grid seconds.
struct GapInterval {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  std::int64_t length() const { return end_s - start_s + 1; }
  friend bool operator==(const GapInterval&, const GapInterval&) = default;
};

struct GapMask {
  std::vector<GapInterval> intervals;
  std::int64_t covered_seconds() const;
  bool contains(std::int64_t second) const;
  friend bool operator==(const GapMask&, const GapMask&) = default;
};

/// Builds the mask from a sorted list of absent seconds (maximal runs).
GapMask gap_mask_from_seconds(std::span<const std::int64_t> sorted_seconds);

/// Maximal runs of frames without heart rate.
GapMask detect_gaps(std::span<const AlignedFrame> frames);

/// Throws DataError unless frames step by exactly one second.
void require_unit_grid(std::span<const AlignedFrame> frames);

inline constexpr std::string_view kAlignedHeader = "timestamp_s,participant_id,x,y,z,lat,lon,bpm";

void write_aligned_csv(std::ostream& out, std::span<const AlignedStream> streams);
void write_aligned_csv(std::ostream& out, const AlignedStream& stream);
/// Reads an aligned CSV; rows are grouped into streams by participant id in
/// order of first appearance.
std::vector<AlignedStream> read_aligned_csv(std::istream& in);
std::vector<AlignedStream> read_aligned_csv_file(const std::filesystem::path& path);

}  // namespace hrfill
