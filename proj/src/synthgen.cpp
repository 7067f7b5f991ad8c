#include "hrfill/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "hrfill/error.hpp"
#include "hrfill/random.hpp"

namespace hrfill {

namespace {

constexpr std::int64_t kDay = 86400;

// Independent RNG streams per participant.
enum Stream : std::uint64_t { kProfile = 1, kActivity, kAccel, kNoise, kGpsJitter };

// Cohort-wide streams use this in place of a participant index.
constexpr std::uint64_t kCohort = ~std::uint64_t{0};
constexpr int kNeighbourhoods = 3;
constexpr int kWorkplaces = 2;
constexpr int kVenues = 2;

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  const std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return (a - floor_mod(a, b)) / b; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

double signed_offset(Rng& rng, double lo, double hi) {
  const double magnitude = uniform(rng, lo, hi);
  return uniform_unit(rng) < 0.5 ? -magnitude : magnitude;
}

double round_to(double value, double step) { return std::round(value / step) * step; }

// 1970-01-01 was a Thursday; days 2 and 3 of this cycle are Saturday and Sunday.
bool is_weekend(std::int64_t local_day) {
  const auto d = floor_mod(local_day, 7);
  return d == 2 || d == 3;
}

const Gps& anchor_at(const SynthProfile& p, std::int64_t local_day, double hour) {
  if (is_weekend(local_day)) return hour >= 11.0 && hour < 15.0 ? p.other : p.home;
  if (hour >= p.work_start_h && hour < p.work_end_h) return p.work;
  if (hour >= p.work_end_h && hour < p.work_end_h + 1.5) return p.other;
  return p.home;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_participants < 1) throw UsageError("synth: participants must be >= 1");
  if (duration_s < 3600) throw UsageError("synth: duration must be >= 3600 s");
  if (tz_offset_min < -840 || tz_offset_min > 840) throw UsageError("synth: tz offset must be in [-840, 840] minutes");
  if (!(hr_baseline_min >= 40.0 && hr_baseline_max <= 100.0 && hr_baseline_min <= hr_baseline_max)) {
    throw UsageError("synth: heart-rate baseline range must lie within [40, 100] bpm");
  }
  if (!(circadian_amplitude >= 0.0)) throw UsageError("synth: circadian amplitude must be >= 0");
  if (!(circadian_phase_jitter_h >= 0.0 && circadian_phase_jitter_h <= 12.0)) {
    throw UsageError("synth: circadian phase jitter must be in [0, 12] hours");
  }
  if (!(activity_rate >= 0.0 && activity_rate <= 200.0)) throw UsageError("synth: activity rate must be in [0, 200] per day");
  if (!(activity_hr_gain >= 0.0)) throw UsageError("synth: activity gain must be >= 0");
  if (!(activity_smoothing_s >= 0.0)) throw UsageError("synth: activity smoothing must be >= 0");
  if (!(response_jitter >= 0.0 && response_jitter < 1.0)) throw UsageError("synth: response jitter must be in [0, 1)");
  if (!(noise_std >= 0.0)) throw UsageError("synth: noise std must be >= 0");
  if (!(noise_correlation_s >= 0.0)) throw UsageError("synth: noise correlation must be >= 0");
}

std::string synth_participant_id(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return "p" + digits;
}

SynthProfile synth_profile(const SynthConfig& config, std::size_t index) {
  Rng rng(mix_seed(config.seed, index, kProfile));
  SynthProfile p;
  p.participant_id = synth_participant_id(index);
  p.baseline = uniform(rng, config.hr_baseline_min, config.hr_baseline_max);
  p.circadian_trough_h = 4.0 + uniform(rng, -config.circadian_phase_jitter_h, config.circadian_phase_jitter_h);
  p.circadian_scale = uniform(rng, 1.0 - config.response_jitter, 1.0 + config.response_jitter);
  p.activity_scale = uniform(rng, 1.0 - config.response_jitter, 1.0 + config.response_jitter);
  // Participants live in one of a few shared neighbourhoods and work and
  // spend evenings at shared places, as in a single-site study.
  Rng cohort(mix_seed(config.seed, kCohort, kProfile));
  const Gps center{38.03 + uniform(cohort, -0.2, 0.2), -78.50 + uniform(cohort, -0.2, 0.2)};
  std::vector<Gps> places;
  for (int k = 0; k < kNeighbourhoods + kWorkplaces + kVenues; ++k) {
    places.push_back({center.lat + signed_offset(cohort, 0.02, 0.6), center.lon + signed_offset(cohort, 0.02, 0.6)});
  }
  p.home = places[uniform_below(rng, kNeighbourhoods)];
  p.work = places[kNeighbourhoods + uniform_below(rng, kWorkplaces)];
  p.other = places[kNeighbourhoods + kWorkplaces + uniform_below(rng, kVenues)];
  p.work_start_h = uniform(rng, 7.5, 9.5);
  p.work_end_h = p.work_start_h + uniform(rng, 7.5, 9.0);
  return p;
}

SynthParticipant generate_participant(const SynthConfig& config, std::size_t index) {
  config.validate();
  SynthParticipant out;
  out.profile = synth_profile(config, index);
  const SynthProfile& prof = out.profile;
  const auto n = static_cast<std::size_t>(config.duration_s);
  const std::int64_t tz_s = static_cast<std::int64_t>(config.tz_offset_min) * 60;
  const std::int64_t local_start = config.start_epoch_s + tz_s;

  // Activity bouts: a Poisson number per local day, starting between 07:00
  // and 21:00, lasting 5 to 40 minutes at a fixed intensity (g).
  std::vector<double> intensity(n, 0.0);
  {
    Rng rng(mix_seed(config.seed, index, kActivity));
    const std::int64_t first_day = floor_div(local_start, kDay);
    const std::int64_t last_day = floor_div(local_start + config.duration_s - 1, kDay);
    for (std::int64_t day = first_day; day <= last_day; ++day) {
      const auto bouts = poisson(rng, config.activity_rate);
      for (std::uint64_t b = 0; b < bouts; ++b) {
        const auto start = static_cast<std::int64_t>(uniform(rng, 7.0, 21.0) * 3600.0);
        const auto length = static_cast<std::int64_t>(uniform(rng, 5.0, 40.0) * 60.0);
        const double level = uniform(rng, 0.15, 0.6);
        for (std::int64_t s = 0; s < length; ++s) {
          const std::int64_t i = day * kDay + start + s - local_start;
          if (i >= 0 && i < config.duration_s) {
            auto& slot = intensity[static_cast<std::size_t>(i)];
            slot = std::max(slot, level);
          }
        }
      }
    }
  }

  Rng accel_rng(mix_seed(config.seed, index, kAccel));
  Rng noise_rng(mix_seed(config.seed, index, kNoise));
  Rng gps_rng(mix_seed(config.seed, index, kGpsJitter));
  const double smooth_keep =
      config.activity_smoothing_s > 0.0 ? std::exp(-1.0 / config.activity_smoothing_s) : 0.0;
  const double noise_keep = config.noise_correlation_s > 0.0 ? std::exp(-1.0 / config.noise_correlation_s) : 0.0;
  const double noise_innovation = config.noise_std * std::sqrt(1.0 - noise_keep * noise_keep);

  out.accel.reserve(n);
  out.hr.reserve(n);
  out.gps.reserve(n / kGpsIntervalS + 1);
  double smoothed = 0.0;
  double noise = config.noise_std * standard_normal(noise_rng);

  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t t = config.start_epoch_s + static_cast<std::int64_t>(i);
    const std::int64_t local = t + tz_s;
    const std::int64_t local_day = floor_div(local, kDay);
    const double hour = static_cast<double>(floor_mod(local, kDay)) / 3600.0;
    const std::int64_t ms = t * 1000;

    Accel a{0.0, 0.0, 1.0};
    if (intensity[i] > 0.0) {
      // Moving phone: per-axis jitter plus a vertical push that keeps the
      // deviation from 1 g close to the bout intensity.
      const double level = intensity[i];
      a.x = round_to(level * 0.3 * standard_normal(accel_rng), 1e-4);
      a.y = round_to(level * 0.3 * standard_normal(accel_rng), 1e-4);
      a.z = round_to(1.0 + level * uniform(accel_rng, 0.8, 1.2), 1e-4);
    }
    out.accel.push_back({ms, a});
    const double deviation = std::abs(std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z) - 1.0);
    smoothed = smooth_keep * smoothed + (1.0 - smooth_keep) * deviation;

    if (i > 0) noise = noise_keep * noise + noise_innovation * standard_normal(noise_rng);
    const double circadian = -config.circadian_amplitude * prof.circadian_scale *
                             std::cos(2.0 * std::numbers::pi * (hour - prof.circadian_trough_h) / 24.0);
    double bpm = prof.baseline + circadian + config.activity_hr_gain * prof.activity_scale * smoothed + noise;
    if (bpm < kSynthMinBpm || bpm > kSynthMaxBpm) {
      ++out.clamp_events;
      bpm = std::clamp(bpm, kSynthMinBpm, kSynthMaxBpm);
    }
    out.hr.push_back({ms, HeartRate{round_to(bpm, 0.01)}});

    if (i % static_cast<std::size_t>(kGpsIntervalS) == 0) {
      const Gps& anchor = anchor_at(prof, local_day, hour);
      const double lat = round_to(anchor.lat + 2e-4 * standard_normal(gps_rng), 1e-6);
      const double lon = round_to(anchor.lon + 2e-4 * standard_normal(gps_rng), 1e-6);
      out.gps.push_back({ms, Gps{lat, lon}});
    }
  }
  return out;
}

void validate_gap_pattern(const GapPattern& pattern) {
  std::visit(
      [](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, RandomDropout>) {
          if (!(g.p >= 0.0 && g.p <= 1.0)) throw UsageError("random_dropout: p must be in [0, 1]");
        } else if constexpr (std::is_same_v<G, NightlyNonwear>) {
          if (!(g.start_hour >= 0.0 && g.start_hour < 24.0)) throw UsageError("nightly_nonwear: start hour must be in [0, 24)");
          if (!(g.hours > 0.0 && g.hours <= 24.0)) throw UsageError("nightly_nonwear: hours must be in (0, 24]");
        } else {
          if (g.day < 0) throw UsageError("battery: depletion day must be >= 0");
        }
      },
      pattern);
}

std::string describe(const GapPattern& pattern) {
  return std::visit(
      [](const auto& g) -> std::string {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, RandomDropout>) {
          return "random_dropout(p=" + std::to_string(g.p) + ")";
        } else if constexpr (std::is_same_v<G, NightlyNonwear>) {
          return "nightly_nonwear(start=" + std::to_string(g.start_hour) + "h, hours=" + std::to_string(g.hours) + ")";
        } else {
          return "battery(day=" + std::to_string(g.day) + ")";
        }
      },
      pattern);
}

GapInjection inject_gaps(std::span<const SensorRecord> hr, std::span<const GapPattern> patterns, std::uint64_t seed,
                         int tz_offset_min) {
  if (hr.empty()) throw UsageError("inject_gaps: no heart-rate records");
  for (const auto& p : patterns) validate_gap_pattern(p);
  const std::int64_t tz_s = static_cast<std::int64_t>(tz_offset_min) * 60;
  const std::int64_t first_local_day = floor_div(grid_second(hr.front().timestamp_ms) + tz_s, kDay);

  std::vector<char> drop(hr.size(), 0);
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    Rng rng(mix_seed(seed, k));
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, RandomDropout>) {
            for (auto& d : drop) {
              if (uniform_unit(rng) < g.p) d = 1;
            }
          } else if constexpr (std::is_same_v<G, NightlyNonwear>) {
            const auto start = static_cast<std::int64_t>(std::llround(g.start_hour * 3600.0));
            const auto length = static_cast<std::int64_t>(std::llround(g.hours * 3600.0));
            for (std::size_t i = 0; i < hr.size(); ++i) {
              const std::int64_t local = grid_second(hr[i].timestamp_ms) + tz_s;
              if (floor_mod(floor_mod(local, kDay) - start, kDay) < length) drop[i] = 1;
            }
          } else {
            const std::int64_t day_start = (first_local_day + g.day) * kDay;
            const auto dies = day_start + static_cast<std::int64_t>(uniform(rng, 12.0, 20.0) * 3600.0);
            const std::int64_t back = day_start + kDay + 7 * 3600;
            for (std::size_t i = 0; i < hr.size(); ++i) {
              const std::int64_t local = grid_second(hr[i].timestamp_ms) + tz_s;
              if (local >= dies && local < back) drop[i] = 1;
            }
          }
        },
        patterns[k]);
  }

  GapInjection out;
  std::vector<std::int64_t> removed;
  for (std::size_t i = 0; i < hr.size(); ++i) {
    if (drop[i]) {
      removed.push_back(grid_second(hr[i].timestamp_ms));
    } else {
      out.hr.push_back(hr[i]);
    }
  }
  if (out.hr.empty()) throw UsageError("inject_gaps: the gap patterns would delete every heart-rate record");
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());
  out.mask = gap_mask_from_seconds(removed);
  return out;
}

void write_participant_csvs(const std::filesystem::path& dir, std::span<const SensorRecord> accel,
                            std::span<const SensorRecord> gps, std::span<const SensorRecord> hr) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const auto write = [&](const char* name, Channel channel, std::span<const SensorRecord> records) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_channel_csv(out, channel, records);
    if (!out) throw DataError("failed writing " + path.string());
  };
  write("accel.csv", Channel::accel, accel);
  write("gps.csv", Channel::gps, gps);
  write("hr.csv", Channel::hr, hr);
}

}  // namespace hrfill
