#include "hrfill/baseline.hpp"

#include <cmath>
#include <limits>

#include "hrfill/error.hpp"

namespace hrfill {

HrSeries HrSeries::from_frames(std::span<const AlignedFrame> frames) {
  require_unit_grid(frames);
  HrSeries series;
  if (frames.empty()) return series;
  series.start_s = frames.front().timestamp_s;
  series.bpm.reserve(frames.size());
  for (const auto& f : frames) series.bpm.push_back(f.hr.value_or(std::numeric_limits<double>::quiet_NaN()));
  return series;
}

bool HrSeries::observed(std::size_t i) const { return !std::isnan(bpm[i]); }

std::vector<double> baseline_grid(const HrSeries& series, std::int64_t window_s) {
  if (window_s <= 0) throw UsageError("baseline window must be > 0 seconds");
  const std::size_t n = series.size();
  const auto window = static_cast<std::size_t>(window_s);
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());

  double previous_mean = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t block = 0; block * window < n; ++block) {
    const std::size_t begin = block * window;
    const std::size_t end = std::min(n, begin + window);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (series.observed(i)) {
        sum += series.bpm[i];
        ++count;
      }
      out[i] = previous_mean;
    }
    previous_mean = count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

BaselineTrace baseline_interpolate(const HrSeries& series, std::int64_t window_s) {
  const auto grid = baseline_grid(series, window_s);
  BaselineTrace trace;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(grid[i])) {
      ++trace.uncovered_seconds;
    } else {
      trace.timestamps.push_back(series.start_s + static_cast<std::int64_t>(i));
      trace.predicted.push_back(grid[i]);
    }
  }
  return trace;
}

BaselineTrace baseline_interpolate(std::span<const AlignedFrame> frames, std::int64_t window_s) {
  return baseline_interpolate(HrSeries::from_frames(frames), window_s);
}

}  // namespace hrfill
