#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hrfill/ingest.hpp"

namespace hrfill {

/// Heart rate on a contiguous 1 Hz grid; NaN marks absent seconds.
struct HrSeries {
  std::int64_t start_s = 0;
  std::vector<double> bpm;

  static HrSeries from_frames(std::span<const AlignedFrame> frames);
  std::size_t size() const { return bpm.size(); }
  bool observed(std::size_t i) const;
};

inline constexpr std::int64_t kDefaultBaselineWindowS = 1800;

/// Predictions of the moving-average interpolation baseline for covered
/// seconds, in time order.
struct BaselineTrace {
  std::vector<std::int64_t> timestamps;
  std::vector<double> predicted;
  std::size_t uncovered_seconds = 0;
};

/// Tiles the timeline into `window_s` blocks starting at the first second.
/// Every second of block b >= 1 is predicted as the mean of the observed
/// heart rate in block b - 1; blocks whose predecessor has no observation
/// (and the first block) are uncovered.
BaselineTrace baseline_interpolate(const HrSeries& series, std::int64_t window_s);
BaselineTrace baseline_interpolate(std::span<const AlignedFrame> frames, std::int64_t window_s);

/// Same predictions laid out per grid second, NaN where uncovered.
std::vector<double> baseline_grid(const HrSeries& series, std::int64_t window_s);

}  // namespace hrfill
