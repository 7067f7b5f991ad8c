#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hrfill/ingest.hpp"

namespace hrfill {

/// Parameters of the synthetic cohort. Heart rate is
///   baseline + circadian + gain * smoothed accel deviation + AR(1) noise
/// where the circadian term is a sinusoid with its trough near 04:00 local.
struct SynthConfig {
  std::size_t n_participants = 12;
  std::int64_t duration_s = 7 * 86400;
  std::int64_t start_epoch_s = 1551398400;  // 2019-03-01 00:00:00 UTC
  int tz_offset_min = 0;
  double hr_baseline_min = 55.0;
  double hr_baseline_max = 85.0;
  double circadian_amplitude = 8.0;    // bpm, half the peak-to-trough swing
  double circadian_phase_jitter_h = 2.5;
  double activity_rate = 12.0;         // expected bouts per day
  double activity_hr_gain = 40.0;      // bpm per g of smoothed deviation
  double activity_smoothing_s = 20.0;
  double response_jitter = 0.5;        // spread of per-participant response multipliers
  double noise_std = 3.0;
  double noise_correlation_s = 30.0;   // AR(1) time constant; 0 gives white noise
  std::uint64_t seed = 42;

  /// Throws UsageError naming the first invalid field.
  void validate() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Latent per-participant traits drawn from (seed, index).
struct SynthProfile {
  std::string participant_id;
  double baseline = 70.0;
  double circadian_trough_h = 4.0;
  double circadian_scale = 1.0;
  double activity_scale = 1.0;
  Gps home;
  Gps work;
  Gps other;
  double work_start_h = 8.0;
  double work_end_h = 17.0;
};

struct SynthParticipant {
  SynthProfile profile;
  std::vector<SensorRecord> accel;  // 1 Hz
  std::vector<SensorRecord> gps;    // every 15 s
  std::vector<SensorRecord> hr;     // 1 Hz
  std::size_t clamp_events = 0;     // seconds whose heart rate hit the [30, 220] clamp
};

inline constexpr double kSynthMinBpm = 30.0;
inline constexpr double kSynthMaxBpm = 220.0;
inline constexpr std::int64_t kGpsIntervalS = 15;

std::string synth_participant_id(std::size_t index);
SynthProfile synth_profile(const SynthConfig& config, std::size_t index);

/// Fully determined by (config, index).
SynthParticipant generate_participant(const SynthConfig& config, std::size_t index);

struct RandomDropout {
  double p = 0.1;
};
/// Watch taken off every night from `start_hour` local for `hours`.
struct NightlyNonwear {
  double start_hour = 23.0;
  double hours = 8.0;
};
/// Battery runs flat at a random time between 12:00 and 20:00 local on day
/// `day` (0 = day of the first record) and the watch is off until 07:00 the
/// next morning.
struct BatteryDepletion {
  int day = 0;
};
using GapPattern = std::variant<RandomDropout, NightlyNonwear, BatteryDepletion>;

void validate_gap_pattern(const GapPattern& pattern);
std::string describe(const GapPattern& pattern);

struct GapInjection {
  std::vector<SensorRecord> hr;  // surviving records
  GapMask mask;                  // grid seconds of the deleted records
};

/// Deletes heart-rate records according to `patterns` (union of all).
/// Throws UsageError if every record would be deleted.
GapInjection inject_gaps(std::span<const SensorRecord> hr, std::span<const GapPattern> patterns, std::uint64_t seed,
                         int tz_offset_min = 0);

/// Writes accel.csv, gps.csv and hr.csv into `dir` (created if needed).
void write_participant_csvs(const std::filesystem::path& dir, std::span<const SensorRecord> accel,
                            std::span<const SensorRecord> gps, std::span<const SensorRecord> hr);

}  // namespace hrfill
