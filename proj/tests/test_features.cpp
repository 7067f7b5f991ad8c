#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "hrfill/csv.hpp"
#include "hrfill/error.hpp"
#include "hrfill/features.hpp"
#include "oracles.hpp"

using namespace hrfill;

TEST(Features, MagnitudePythagoreanTriples) {
  EXPECT_EQ(accel_magnitude(0, 0, 0), 0.0);
  EXPECT_EQ(accel_magnitude(3, 4, 0), 5.0);
  EXPECT_EQ(accel_magnitude(2, 3, 6), 7.0);
  EXPECT_EQ(accel_magnitude(1, 4, 8), 9.0);
  EXPECT_EQ(accel_magnitude(-2, -10, 11), 15.0);
  EXPECT_EQ(accel_magnitude(0, 0, -1), 1.0);
}

TEST(Features, DeviationTransform) {
  EXPECT_EQ(deviation_transform(1.0), 0.0);
  EXPECT_EQ(deviation_transform(0.75), 0.25);
  EXPECT_EQ(deviation_transform(-1.0), 2.0);
}

TEST(Features, RoundCoordinateTiesAwayFromZero) {
  EXPECT_EQ(round_coordinate(-78.55, 1), -78.6);
  EXPECT_EQ(round_coordinate(78.55, 1), 78.6);
  EXPECT_EQ(round_coordinate(1.005, 2), 1.01);  // binary value is below the tie
  EXPECT_EQ(round_coordinate(0.5, 0), 1.0);
  EXPECT_EQ(round_coordinate(-0.5, 0), -1.0);
  EXPECT_EQ(round_coordinate(-0.04, 1), -0.0);
  EXPECT_THROW(round_coordinate(1.0, 3), UsageError);
}

// Coordinates on a micro-degree lattice; integer rounding is the oracle.
TEST(Features, RoundCoordinateMatchesIntegerOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> micro(-180'000'000, 180'000'000);
  auto round_int = [](std::int64_t v, std::int64_t unit) {
    const std::int64_t a = v < 0 ? -v : v;
    const std::int64_t r = (a + unit / 2) / unit;
    return v < 0 ? -r : r;
  };
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t k = micro(rng);
    const double v = static_cast<double>(k) / 1e6;
    ASSERT_EQ(round_coordinate(v, 2), static_cast<double>(round_int(k, 10000)) / 100.0) << v;
    ASSERT_EQ(round_coordinate(v, 0), static_cast<double>(round_int(k, 1'000'000))) << v;
  }
}

TEST(Features, SuccessiveRoundingConsistency) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  const FeatureOptions options;
  for (int i = 0; i < 10000; ++i) {
    const auto row = make_feature_row(0, Accel{0, 0, 1}, Gps{lat(rng), lon(rng)}, options);
    ASSERT_EQ(round_coordinate(row.lat2, 1), row.lat1);
    ASSERT_EQ(round_coordinate(row.lat1, 0), row.lat0);
    ASSERT_EQ(round_coordinate(row.lon2, 1), row.lon1);
    ASSERT_EQ(round_coordinate(row.lon1, 0), row.lon0);
  }
}

TEST(Features, TimeComponentsMatchCalendarOracles) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::int64_t> epoch(0, 4'102'444'800);  // 1970..2100
  std::uniform_int_distribution<int> tz(-kMaxTzOffsetMinutes, kMaxTzOffsetMinutes);
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t e = epoch(rng);
    const int offset = tz(rng);
    const auto got = time_components(e, offset);
    const auto want = oracle::clock_time(e, offset);
    ASSERT_EQ(got.hour, want.hour);
    ASSERT_EQ(got.minute, want.minute);
    ASSERT_EQ(got.second, want.second);

    using namespace std::chrono;
    const sys_seconds t{seconds{e + offset * 60}};
    const hh_mm_ss hms{t - floor<days>(t)};
    ASSERT_EQ(got.hour, hms.hours().count());
    ASSERT_EQ(got.minute, hms.minutes().count());
    ASSERT_EQ(got.second, hms.seconds().count());
  }
}

TEST(Features, TimeComponentsKnownValuesAndBounds) {
  EXPECT_EQ(time_components(1551398400, 0), (ClockTime{0, 0, 0}));  // 2019-03-01T00:00:00Z
  EXPECT_EQ(time_components(1551398400, -300), (ClockTime{19, 0, 0}));
  EXPECT_EQ(time_components(-1, 0), (ClockTime{23, 59, 59}));
  EXPECT_EQ(time_components(0, 330), (ClockTime{5, 30, 0}));
  EXPECT_THROW(time_components(0, 841), UsageError);
}

TEST(Features, ZScoreInvertsAndRejectsConstant) {
  const std::vector<double> bpm = {60, 70, 80, 90};
  const auto z = zscore_fit(bpm);
  EXPECT_DOUBLE_EQ(z.mean, 75);
  EXPECT_DOUBLE_EQ(z.std, std::sqrt(125.0));
  for (double v : bpm) EXPECT_NEAR(zscore_invert(zscore_apply(v, z), z), v, 1e-12);
  const std::vector<double> flat = {70, 70, 70};
  EXPECT_THROW(zscore_fit(flat), DataError);
  const std::vector<double> one = {70};
  EXPECT_THROW(zscore_fit(one), DataError);
}

TEST(Features, DeviationModes) {
  const Accel a{0.5, -0.5, 2.0};
  const Gps g{40, -70};
  const auto none = make_feature_row(0, a, g, {DeviationMode::none, 0});
  const auto mag = make_feature_row(0, a, g, {DeviationMode::magnitude, 0});
  const auto all = make_feature_row(0, a, g, {DeviationMode::all, 0});
  const double m = std::sqrt(4.5);
  EXPECT_EQ(none.x, 0.5);
  EXPECT_DOUBLE_EQ(none.magnitude, m);
  EXPECT_EQ(mag.x, 0.5);
  EXPECT_DOUBLE_EQ(mag.magnitude, m - 1);
  EXPECT_EQ(all.x, 0.5);
  EXPECT_EQ(all.y, 1.5);
  EXPECT_EQ(all.z, 1.0);
  EXPECT_DOUBLE_EQ(all.magnitude, m - 1);
}

namespace {

AlignedStream toy_stream() {
  AlignedStream s{"p", {}};
  for (std::int64_t t = 100; t < 200; ++t) {
    AlignedFrame f;
    f.timestamp_s = t;
    if (t % 7 != 0) f.accel = Accel{0, 0, 1};
    if (t % 11 != 0) f.gps = Gps{40.5, -70.25};
    if (t % 13 != 0) f.hr = 60.0 + static_cast<double>(t - 100);
    s.frames.push_back(f);
  }
  return s;
}

}  // namespace

TEST(Features, MatrixKeepsOnlyCompleteCases) {
  const auto s = toy_stream();
  const auto m = build_feature_matrix(s, TargetKind::bpm, std::nullopt, {});
  std::size_t expected = 0;
  for (const auto& f : s.frames) expected += is_complete_case(f) ? 1 : 0;
  ASSERT_EQ(m.size(), expected);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m.target[i], 60.0 + static_cast<double>(m.timestamps[i] - 100));
    EXPECT_EQ(m.participant_ids[i], "p");
  }
  const Dataset d = m.design();
  EXPECT_EQ(d.cols(), kFeatureCount);
  EXPECT_EQ(d.feature_names, feature_names());
}

TEST(Features, StrideKeepsMultiplesOfOrigin) {
  const auto s = toy_stream();
  const auto m = build_feature_matrix(s, TargetKind::bpm, std::nullopt, {}, 5);
  for (auto t : m.timestamps) EXPECT_EQ((t - 100) % 5, 0);
  EXPECT_THROW(build_feature_matrix(s, TargetKind::bpm, std::nullopt, {}, 0), UsageError);
}

TEST(Features, ZScoreTargetNeedsParams) {
  const auto s = toy_stream();
  EXPECT_THROW(build_feature_matrix(s, TargetKind::zscore, std::nullopt, {}), UsageError);
  const ZScoreParams z{100, 10};
  const auto m = build_feature_matrix(s, TargetKind::zscore, z, {});
  EXPECT_DOUBLE_EQ(m.target[0], (60.0 + static_cast<double>(m.timestamps[0] - 100) - 100) / 10);
}

TEST(Features, NoCompleteCaseIsDataError) {
  AlignedStream s{"p", {AlignedFrame{0, Accel{}, std::nullopt, 70.0}}};
  EXPECT_THROW(build_feature_matrix(s, TargetKind::bpm, std::nullopt, {}), DataError);
}

TEST(Features, SubsetAndAppend) {
  const auto m = build_feature_matrix(toy_stream(), TargetKind::bpm, std::nullopt, {});
  const std::vector<std::size_t> pick = {3, 0};
  const auto sub = m.subset(pick);
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.rows[0], m.rows[3]);
  EXPECT_EQ(sub.target[1], m.target[0]);
  auto both = sub;
  both.append(m);
  EXPECT_EQ(both.size(), m.size() + 2);
}

TEST(Features, CsvHasHeaderAndOneLinePerRow) {
  const auto m = build_feature_matrix(toy_stream(), TargetKind::bpm, std::nullopt, {});
  std::ostringstream out;
  write_feature_csv(out, m);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kFeatureCsvHeader);
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, m.size());
}

TEST(Features, ParseEnums) {
  EXPECT_EQ(parse_deviation_mode("magnitude"), DeviationMode::magnitude);
  EXPECT_EQ(parse_target_kind("zscore"), TargetKind::zscore);
  EXPECT_THROW(parse_target_kind("bogus"), UsageError);
}
