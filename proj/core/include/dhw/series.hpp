#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dhw/time.hpp"

namespace dhw {

struct TimedValue {
  Timestamp time;
  double value = 0.0;
};

/// Piecewise-constant series: values[i] holds on [start + i*step, start + (i+1)*step).
struct RegularSeries {
  Timestamp start{};
  Seconds step{kHour};
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  Timestamp end() const { return start + step * static_cast<long>(values.size()); }
  Timestamp time_at(std::size_t i) const { return start + step * static_cast<long>(i); }

  bool covers(Timestamp from, Timestamp to) const { return from >= start && to <= end(); }

  /// Value of the interval containing t; throws misaligned_forecast outside the span.
  double at(Timestamp t) const;

  /// Index of the interval containing t, or size() when outside.
  std::size_t index_of(Timestamp t) const;

  RegularSeries slice(Timestamp from, std::size_t count) const;
};

/// PV power forecast over the receding horizon (kW per step).
using ForecastSeries = RegularSeries;

/// Puts irregular samples on a regular grid anchored at the first sample.
/// Gaps of up to `max_gap_steps` missing steps are linearly interpolated;
/// longer gaps are left as NaN so callers can drop the affected samples.
RegularSeries regularize(std::span<const TimedValue> samples, Seconds step,
                         int max_gap_steps = 3);

/// Means over consecutive blocks of `step`; `step` must be a multiple of the
/// input step. A trailing partial block is dropped.
RegularSeries resample_mean(const RegularSeries& series, Seconds step);

}  // namespace dhw
