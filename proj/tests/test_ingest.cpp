#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"
#include "hrfill/ingest.hpp"

using namespace hrfill;

namespace {

SensorRecord accel_at(std::int64_t ms, double x, double y, double z) { return {ms, Accel{x, y, z}}; }
SensorRecord gps_at(std::int64_t ms, double lat, double lon) { return {ms, Gps{lat, lon}}; }
SensorRecord hr_at(std::int64_t ms, double bpm) { return {ms, HeartRate{bpm}}; }

}  // namespace

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng);
    const auto text = csv::format_double(v);
    ASSERT_EQ(csv::parse_double(text).value(), v) << text;
  }
  EXPECT_EQ(csv::format_double(0.1), "0.1");
  EXPECT_EQ(csv::format_double(72.0), "72");
}

TEST(Csv, ParseRejectsJunk) {
  EXPECT_FALSE(csv::parse_double("").has_value());
  EXPECT_FALSE(csv::parse_double("12abc").has_value());
  EXPECT_FALSE(csv::parse_int("1.5").has_value());
  EXPECT_EQ(csv::parse_int("-42").value(), -42);
  EXPECT_EQ(csv::chomp("a,b\r"), "a,b");
  const auto parts = csv::split("a,,c");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
}

TEST(Ingest, ValidateRecordRanges) {
  EXPECT_FALSE(validate_record(hr_at(0, 60)).has_value());
  EXPECT_TRUE(validate_record(hr_at(0, kMinBpm - 1)).has_value());
  EXPECT_TRUE(validate_record(hr_at(0, kMaxBpm + 1)).has_value());
  EXPECT_TRUE(validate_record(gps_at(0, 91, 0)).has_value());
  EXPECT_TRUE(validate_record(gps_at(0, 0, -181)).has_value());
  EXPECT_FALSE(validate_record(gps_at(0, -90, 180)).has_value());
}

TEST(Ingest, ParseChannelCollectsMalformedRows) {
  std::istringstream in(
      "timestamp_ms,bpm\n"
      "3000,70\n"
      "1000,65\r\n"
      "2000,abc\n"
      "\n"
      "4000,71\n");
  const auto result = parse_channel(in, Channel::hr);
  EXPECT_EQ(result.data_rows, 4u);
  ASSERT_EQ(result.malformed.size(), 1u);
  EXPECT_EQ(result.malformed[0].line, 4u);
  ASSERT_EQ(result.records.size(), 3u);
  EXPECT_EQ(result.records[0].timestamp_ms, 1000);  // sorted
  EXPECT_EQ(std::get<HeartRate>(result.records[2].payload).bpm, 71);
}

TEST(Ingest, ParseChannelSchemaErrors) {
  std::istringstream wrong_header("time,bpm\n1,60\n");
  EXPECT_THROW(parse_channel(wrong_header, Channel::hr), DataError);
  std::istringstream empty("");
  EXPECT_THROW(parse_channel(empty, Channel::gps), DataError);
  std::istringstream mostly_bad("timestamp_ms,x,y,z\n1,a,b,c\n2,1,1\n3,0,0,1\n");
  EXPECT_THROW(parse_channel(mostly_bad, Channel::accel), DataError);
}

TEST(Ingest, ChannelCsvRoundTrip) {
  const std::vector<SensorRecord> records = {accel_at(0, 0.1, -0.25, 1.0000001), accel_at(1000, 1e-4, 0, 0.98)};
  std::stringstream buf;
  write_channel_csv(buf, Channel::accel, records);
  const auto back = parse_channel(buf, Channel::accel);
  EXPECT_TRUE(back.malformed.empty());
  EXPECT_EQ(back.records, records);
}

TEST(Ingest, GridSecondRoundsHalfDown) {
  EXPECT_EQ(grid_second(0), 0);
  EXPECT_EQ(grid_second(499), 0);
  EXPECT_EQ(grid_second(500), 0);
  EXPECT_EQ(grid_second(501), 1);
  EXPECT_EQ(grid_second(1500), 1);
  EXPECT_EQ(grid_second(-500), -1);
  EXPECT_EQ(grid_second(-499), 0);
}

TEST(Ingest, GridSecondMatchesNearestOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> u(-10'000'000, 10'000'000);
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t ms = u(rng);
    const std::int64_t s = grid_second(ms);
    const std::int64_t d = ms - s * 1000;
    ASSERT_TRUE(d > -500 && d <= 500) << ms;
  }
}

TEST(Ingest, AlignNearestAndGpsHold) {
  const std::vector<SensorRecord> accel = {accel_at(1000, 0, 0, 1), accel_at(2400, 0, 0, 2)};
  const std::vector<SensorRecord> gps = {gps_at(1000, 40, -70)};
  const std::vector<SensorRecord> hr = {hr_at(1500, 60), hr_at(100'000, 61)};
  const auto s = align_streams(accel, gps, hr, "p1");
  EXPECT_EQ(s.participant_id, "p1");
  ASSERT_EQ(s.frames.front().timestamp_s, 1);
  ASSERT_EQ(s.frames.back().timestamp_s, 100);
  require_unit_grid(s.frames);
  EXPECT_EQ(s.frames[0].accel->z, 1);
  EXPECT_EQ(s.frames[1].accel->z, 2);  // 2400 ms is nearest to second 2
  EXPECT_FALSE(s.frames[2].accel.has_value());
  EXPECT_EQ(s.frames[0].hr.value(), 60);  // 1500 ms ties to second 1
  EXPECT_EQ(s.frames[1].hr.value(), 60);  // 500 ms from second 2 as well: inside the window
  EXPECT_TRUE(s.frames[60].gps.has_value());  // second 61: fix is 60 s old
  EXPECT_FALSE(s.frames[61].gps.has_value());
  EXPECT_EQ(s.frames[99].hr.value(), 61);
}

TEST(Ingest, AlignRejectsUnsortedAndEmpty) {
  const std::vector<SensorRecord> accel = {accel_at(2000, 0, 0, 1), accel_at(1000, 0, 0, 1)};
  EXPECT_THROW(align_streams(accel, {}, {}, "p"), UsageError);
  EXPECT_THROW(align_streams({}, {}, {}, "p"), DataError);
}

TEST(Ingest, GapDetectionMaximalRuns) {
  std::vector<SensorRecord> hr;
  for (std::int64_t s : {0, 1, 5, 6, 9}) hr.push_back(hr_at(s * 1000, 70));
  const auto stream = align_streams({}, {}, hr, "p");
  const auto mask = detect_gaps(stream.frames);
  ASSERT_EQ(mask.intervals.size(), 2u);
  EXPECT_EQ(mask.intervals[0], (GapInterval{2, 4}));
  EXPECT_EQ(mask.intervals[1], (GapInterval{7, 8}));
  EXPECT_EQ(mask.covered_seconds(), 5);
  EXPECT_TRUE(mask.contains(3));
  EXPECT_FALSE(mask.contains(5));

  const std::vector<std::int64_t> absent = {2, 3, 4, 7, 8};
  EXPECT_EQ(gap_mask_from_seconds(absent), mask);
}

TEST(Ingest, GapMaskPropertyMatchesSecondSet) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution drop(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SensorRecord> hr;
    std::vector<std::int64_t> absent;
    hr.push_back(hr_at(0, 70));
    for (std::int64_t s = 1; s < 300; ++s) {
      if (drop(rng)) {
        absent.push_back(s);
      } else {
        hr.push_back(hr_at(s * 1000, 70));
      }
    }
    hr.push_back(hr_at(300'000, 70));
    const auto stream = align_streams({}, {}, hr, "p");
    const auto mask = detect_gaps(stream.frames);
    EXPECT_EQ(mask.covered_seconds(), static_cast<std::int64_t>(absent.size()));
    for (const auto& f : stream.frames) ASSERT_EQ(mask.contains(f.timestamp_s), !f.hr.has_value());
    for (std::size_t i = 1; i < mask.intervals.size(); ++i) {
      ASSERT_GT(mask.intervals[i].start_s, mask.intervals[i - 1].end_s + 1);  // maximal
    }
  }
}

TEST(Ingest, AlignedCsvRoundTripTwoParticipants) {
  std::vector<SensorRecord> accel = {accel_at(0, 0.5, 0, 1), accel_at(2000, 0, 0.125, 1)};
  std::vector<SensorRecord> gps = {gps_at(0, 40.123456, -74.5)};
  std::vector<SensorRecord> hr = {hr_at(1000, 72.25)};
  std::vector<AlignedStream> streams = {align_streams(accel, gps, hr, "a"), align_streams(accel, {}, hr, "b")};
  std::stringstream buf;
  write_aligned_csv(buf, streams);
  EXPECT_EQ(read_aligned_csv(buf), streams);
}

TEST(Ingest, AlignedCsvRejectsBadHeader) {
  std::istringstream in("timestamp,participant\n");
  EXPECT_THROW(read_aligned_csv(in), DataError);
}
