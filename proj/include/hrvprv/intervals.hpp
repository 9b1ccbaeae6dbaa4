#pragma once

#include "hrvprv/types.hpp"

#include <iosfwd>

namespace hrvprv {

// Physiological guard band for inter-beat intervals, exclusive bounds.
inline constexpr double kMinIntervalMs = 250.0;
inline constexpr double kMaxIntervalMs = 3000.0;

struct OutlierFilterConfig {
  double min_ms = kMinIntervalMs;
  double max_ms = kMaxIntervalMs;
  double max_rel_deviation = 0.20;  // from the local median
  int neighborhood = 11;            // intervals, centered, clipped at ends
  double unreliable_fraction = 0.20;
};

struct FilterResult {
  IntervalSeries series;
  Index removed_absolute = 0;  // outside the guard band
  Index removed_relative = 0;  // local-median rule
  double removed_fraction = 0.0;
  // false when more than unreliable_fraction of the input was removed;
  // the pipeline treats an unreliable series as an error.
  bool reliable = true;
  Index removed_total() const { return removed_absolute + removed_relative; }
};

// n beats -> n-1 intervals; kind follows the beat source. Throws on < 2 beats.
IntervalSeries build_intervals(const BeatSeries& beats);

// Drops intervals outside the guard band, then repeatedly drops intervals
// deviating more than max_rel_deviation from the median of their
// `neighborhood`-interval window until none remain (the fixed point makes
// the operation idempotent). Survivors keep their original timestamps.
FilterResult filter_outliers(const IntervalSeries& series,
                             const OutlierFilterConfig& cfg = {});

// Natural cubic spline through (end_times, durations), sampled at `rate_hz`
// from the first to the last end time. Throws on fewer than 4 intervals.
UniformSeries interpolate_uniform(const IntervalSeries& series, double rate_hz = 4.0);

// Debug export: header "t_s,duration_ms", one row per interval.
void write_intervals_csv(std::ostream& out, const IntervalSeries& series);

}  // namespace hrvprv
