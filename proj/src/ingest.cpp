#include "hrfill/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"

namespace hrfill {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::size_t expected_fields(Channel channel) {
  switch (channel) {
    case Channel::accel: return 4;
    case Channel::gps: return 3;
    case Channel::hr: return 2;
  }
  return 0;
}

// Parses the value fields of one row into a record; returns the reason on
// failure.
std::variant<SensorRecord, std::string> parse_row(const std::vector<std::string_view>& fields,
                                                  Channel channel) {
  if (fields.size() != expected_fields(channel)) {
    return std::string("expected ") + std::to_string(expected_fields(channel)) + " fields, got " +
           std::to_string(fields.size());
  }
  const auto ts = csv::parse_int(fields[0]);
  if (!ts) return std::string("bad timestamp '") + std::string(fields[0]) + "'";

  std::vector<double> values;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto v = csv::parse_double(fields[i]);
    if (!v) return std::string("bad number '") + std::string(fields[i]) + "'";
    values.push_back(*v);
  }

  SensorRecord record{*ts, HeartRate{}};
  switch (channel) {
    case Channel::accel: record.payload = Accel{values[0], values[1], values[2]}; break;
    case Channel::gps: record.payload = Gps{values[0], values[1]}; break;
    case Channel::hr: record.payload = HeartRate{values[0]}; break;
  }
  if (auto reason = validate_record(record)) return *reason;
  return record;
}

template <typename T>
const T& payload_as(const SensorRecord& record, std::string_view what) {
  if (const auto* p = std::get_if<T>(&record.payload)) return *p;
  throw UsageError(std::string("align_streams: non-") + std::string(what) + " record in " +
                   std::string(what) + " input");
}

void require_sorted(std::span<const SensorRecord> records, std::string_view what) {
  const bool sorted = std::is_sorted(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.timestamp_ms < b.timestamp_ms;
  });
  if (!sorted) throw UsageError("align_streams: " + std::string(what) + " input is not sorted by timestamp");
}

// Nearest sample within +-500 ms for each grid second; earlier sample wins
// ties because records are visited in time order and only strictly closer
// samples replace an assignment.
template <typename T, typename Assign>
void assign_nearest(std::span<const SensorRecord> records, std::int64_t first_s, std::size_t grid_size,
                    std::string_view what, Assign assign) {
  std::vector<std::int64_t> best_distance(grid_size, std::numeric_limits<std::int64_t>::max());
  for (const auto& record : records) {
    const T& value = payload_as<T>(record, what);
    const std::int64_t lo = ceil_div(record.timestamp_ms - kNearestWindowMs, 1000);
    const std::int64_t hi = floor_div(record.timestamp_ms + kNearestWindowMs, 1000);
    for (std::int64_t s = lo; s <= hi; ++s) {
      const std::int64_t index = s - first_s;
      if (index < 0 || index >= static_cast<std::int64_t>(grid_size)) continue;
      const std::int64_t distance = std::abs(record.timestamp_ms - s * 1000);
      auto& best = best_distance[static_cast<std::size_t>(index)];
      if (distance < best) {
        best = distance;
        assign(static_cast<std::size_t>(index), value);
      }
    }
  }
}

std::string optional_field(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::accel: return "accel";
    case Channel::gps: return "gps";
    case Channel::hr: return "hr";
  }
  return "?";
}

std::optional<std::string> validate_record(const SensorRecord& record) {
  return std::visit(
      [](const auto& p) -> std::optional<std::string> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Accel>) {
          if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
            return "non-finite acceleration";
          }
        } else if constexpr (std::is_same_v<T, Gps>) {
          if (!(p.lat >= -90.0 && p.lat <= 90.0)) return "latitude out of [-90, 90]";
          if (!(p.lon >= -180.0 && p.lon <= 180.0)) return "longitude out of [-180, 180]";
        } else {
          if (!(p.bpm >= kMinBpm && p.bpm <= kMaxBpm)) return "bpm out of [20, 250]";
        }
        return std::nullopt;
      },
      record.payload);
}

std::string_view channel_header(Channel channel) {
  switch (channel) {
    case Channel::accel: return "timestamp_ms,x,y,z";
    case Channel::gps: return "timestamp_ms,lat,lon";
    case Channel::hr: return "timestamp_ms,bpm";
  }
  return "";
}

ParseResult parse_channel(std::istream& in, Channel channel, std::string_view source) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(std::string(source) + ": empty file, expected header '" +
                    std::string(channel_header(channel)) + "'");
  }
  std::string_view header = csv::chomp(line);
  // Tolerate a UTF-8 byte-order mark.
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != channel_header(channel)) {
    throw DataError(std::string(source) + ": header mismatch for " + std::string(to_string(channel)) +
                    " channel: got '" + std::string(header) + "', expected '" +
                    std::string(channel_header(channel)) + "'");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = csv::chomp(line);
    if (row.empty()) continue;
    ++result.data_rows;
    auto parsed = parse_row(csv::split(row), channel);
    if (auto* record = std::get_if<SensorRecord>(&parsed)) {
      result.records.push_back(*record);
    } else {
      result.malformed.push_back({line_no, std::get<std::string>(parsed)});
    }
  }
  if (in.bad()) throw DataError(std::string(source) + ": read error");

  if (result.data_rows > 0 && 2 * result.malformed.size() > result.data_rows) {
    const auto& first = result.malformed.front();
    throw DataError(std::string(source) + ": " + std::to_string(result.malformed.size()) + " of " +
                    std::to_string(result.data_rows) + " rows malformed (wrong schema?); first at line " +
                    std::to_string(first.line) + ": " + first.reason);
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  return result;
}

ParseResult parse_channel_file(const std::filesystem::path& path, Channel channel) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_channel(in, channel, path.string());
}

void write_channel_csv(std::ostream& out, Channel channel, std::span<const SensorRecord> records) {
  out << channel_header(channel) << '\n';
  for (const auto& r : records) {
    out << r.timestamp_ms;
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Accel>) {
            out << ',' << csv::format_double(p.x) << ',' << csv::format_double(p.y) << ','
                << csv::format_double(p.z);
          } else if constexpr (std::is_same_v<T, Gps>) {
            out << ',' << csv::format_double(p.lat) << ',' << csv::format_double(p.lon);
          } else {
            out << ',' << csv::format_double(p.bpm);
          }
        },
        r.payload);
    out << '\n';
  }
}

std::int64_t grid_second(std::int64_t timestamp_ms) { return floor_div(timestamp_ms + 499, 1000); }

AlignedStream align_streams(std::span<const SensorRecord> accel, std::span<const SensorRecord> gps,
                            std::span<const SensorRecord> hr, std::string participant_id) {
  if (accel.empty() && gps.empty() && hr.empty()) {
    throw DataError("align_streams: all channels empty for participant '" + participant_id + "'");
  }
  require_sorted(accel, "accel");
  require_sorted(gps, "gps");
  require_sorted(hr, "hr");

  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (auto channel : {accel, gps, hr}) {
    if (channel.empty()) continue;
    first = std::min(first, grid_second(channel.front().timestamp_ms));
    last = std::max(last, grid_second(channel.back().timestamp_ms));
  }

  const auto size = static_cast<std::size_t>(last - first + 1);
  AlignedStream stream{std::move(participant_id), std::vector<AlignedFrame>(size)};
  auto& frames = stream.frames;
  for (std::size_t i = 0; i < size; ++i) frames[i].timestamp_s = first + static_cast<std::int64_t>(i);

  assign_nearest<Accel>(accel, first, size, "accel",
                        [&](std::size_t i, const Accel& a) { frames[i].accel = a; });
  assign_nearest<HeartRate>(hr, first, size, "hr",
                            [&](std::size_t i, const HeartRate& h) { frames[i].hr = h.bpm; });

  // GPS: the latest fix at or before the second, if at most 60 s old.
  for (const auto& record : gps) {
    const Gps& fix = payload_as<Gps>(record, "gps");
    const std::int64_t from = grid_second(record.timestamp_ms) - first;
    for (std::int64_t i = from; i <= from + kGpsHoldSeconds && i < static_cast<std::int64_t>(size); ++i) {
      frames[static_cast<std::size_t>(i)].gps = fix;
    }
  }
  return stream;
}

std::int64_t GapMask::covered_seconds() const {
  std::int64_t total = 0;
  for (const auto& g : intervals) total += g.length();
  return total;
}

bool GapMask::contains(std::int64_t second) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), second,
                             [](std::int64_t s, const GapInterval& g) { return s < g.start_s; });
  if (it == intervals.begin()) return false;
  --it;
  return second <= it->end_s;
}

GapMask gap_mask_from_seconds(std::span<const std::int64_t> sorted_seconds) {
  GapMask mask;
  for (const auto s : sorted_seconds) {
    if (!mask.intervals.empty() && mask.intervals.back().end_s + 1 == s) {
      mask.intervals.back().end_s = s;
    } else if (mask.intervals.empty() || mask.intervals.back().end_s < s) {
      mask.intervals.push_back({s, s});
    }
  }
  return mask;
}

GapMask detect_gaps(std::span<const AlignedFrame> frames) {
  GapMask mask;
  for (const auto& f : frames) {
    if (f.hr) continue;
    if (!mask.intervals.empty() && mask.intervals.back().end_s + 1 == f.timestamp_s) {
      mask.intervals.back().end_s = f.timestamp_s;
    } else {
      mask.intervals.push_back({f.timestamp_s, f.timestamp_s});
    }
  }
  return mask;
}

void require_unit_grid(std::span<const AlignedFrame> frames) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].timestamp_s != frames[i - 1].timestamp_s + 1) {
      throw DataError("frames are not on a 1 Hz grid at second " + std::to_string(frames[i].timestamp_s));
    }
  }
}

void write_aligned_csv(std::ostream& out, std::span<const AlignedStream> streams) {
  out << kAlignedHeader << '\n';
  for (const auto& stream : streams) {
    for (const auto& f : stream.frames) {
      out << f.timestamp_s << ',' << stream.participant_id << ',';
      if (f.accel) {
        out << csv::format_double(f.accel->x) << ',' << csv::format_double(f.accel->y) << ','
            << csv::format_double(f.accel->z) << ',';
      } else {
        out << ",,,";
      }
      if (f.gps) {
        out << csv::format_double(f.gps->lat) << ',' << csv::format_double(f.gps->lon) << ',';
      } else {
        out << ",,";
      }
      out << optional_field(f.hr) << '\n';
    }
  }
}

void write_aligned_csv(std::ostream& out, const AlignedStream& stream) {
  write_aligned_csv(out, std::span<const AlignedStream>(&stream, 1));
}

std::vector<AlignedStream> read_aligned_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::chomp(line) != kAlignedHeader) {
    throw DataError("aligned CSV: header mismatch, expected '" + std::string(kAlignedHeader) + "'");
  }
  std::vector<AlignedStream> streams;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1;

  auto fail = [&](const std::string& why) {
    throw DataError("aligned CSV line " + std::to_string(line_no) + ": " + why);
  };
  auto optional_number = [&](std::string_view field) -> std::optional<double> {
    if (field.empty()) return std::nullopt;
    auto v = csv::parse_double(field);
    if (!v) fail("bad number '" + std::string(field) + "'");
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto row = csv::chomp(line);
    if (row.empty()) continue;
    const auto fields = csv::split(row);
    if (fields.size() != 8) fail("expected 8 fields");
    AlignedFrame frame;
    const auto ts = csv::parse_int(fields[0]);
    if (!ts) fail("bad timestamp");
    frame.timestamp_s = *ts;

    const auto x = optional_number(fields[2]);
    const auto y = optional_number(fields[3]);
    const auto z = optional_number(fields[4]);
    if (x && y && z) {
      frame.accel = Accel{*x, *y, *z};
    } else if (x || y || z) {
      fail("partial accelerometer triple");
    }
    const auto lat = optional_number(fields[5]);
    const auto lon = optional_number(fields[6]);
    if (lat && lon) {
      frame.gps = Gps{*lat, *lon};
    } else if (lat || lon) {
      fail("partial GPS pair");
    }
    frame.hr = optional_number(fields[7]);

    const std::string pid(fields[1]);
    auto [it, inserted] = index.try_emplace(pid, streams.size());
    if (inserted) streams.push_back(AlignedStream{pid, {}});
    auto& frames = streams[it->second].frames;
    if (!frames.empty() && frame.timestamp_s != frames.back().timestamp_s + 1) {
      fail("participant '" + pid + "' frames are not consecutive seconds");
    }
    frames.push_back(frame);
  }
  return streams;
}

std::vector<AlignedStream> read_aligned_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_aligned_csv(in);
}

}  // namespace hrfill
