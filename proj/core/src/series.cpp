#include "dhw/series.hpp"

#include <cmath>
#include <limits>

#include "dhw/error.hpp"

namespace dhw {

std::size_t RegularSeries::index_of(Timestamp t) const {
  if (t < start || t >= end()) return values.size();
  return static_cast<std::size_t>((t - start) / step);
}

double RegularSeries::at(Timestamp t) const {
  const std::size_t i = index_of(t);
  if (i >= values.size()) {
    throw Error(ErrorCode::misaligned_forecast,
                "series does not cover " + format_timestamp(t));
  }
  return values[i];
}

RegularSeries RegularSeries::slice(Timestamp from, std::size_t count) const {
  const Timestamp to = from + step * static_cast<long>(count);
  if (!covers(from, to) || (from - start) % step != Seconds{0}) {
    throw Error(ErrorCode::misaligned_series, "slice [" + format_timestamp(from) + ", " +
                                                   format_timestamp(to) + ") not on the series grid");
  }
  const std::size_t first = index_of(from);
  RegularSeries out{from, step, {}};
  out.values.assign(values.begin() + static_cast<long>(first),
                    values.begin() + static_cast<long>(first + count));
  return out;
}

RegularSeries regularize(std::span<const TimedValue> samples, Seconds step, int max_gap_steps) {
  if (samples.empty()) throw Error(ErrorCode::empty_history, "no samples to regularize");
  if (step <= Seconds{0}) throw Error(ErrorCode::invalid_argument, "step must be positive");

  RegularSeries out{samples.front().time, step, {}};
  const auto span_steps = (samples.back().time - out.start) / step;
  out.values.assign(static_cast<std::size_t>(span_steps) + 1,
                    std::numeric_limits<double>::quiet_NaN());

  std::size_t prev_index = 0;
  bool have_prev = false;
  for (const auto& s : samples) {
    const auto offset = s.time - out.start;
    if (offset % step != Seconds{0}) {
      throw Error(ErrorCode::misaligned_series,
                  "sample at " + format_timestamp(s.time) + " is off the regular grid");
    }
    const auto idx = static_cast<std::size_t>(offset / step);
    if (have_prev && idx <= prev_index) {
      throw Error(ErrorCode::misaligned_series, "timestamps must be strictly increasing");
    }
    out.values[idx] = s.value;
    if (have_prev) {
      const auto missing = static_cast<long>(idx - prev_index) - 1;
      if (missing > 0 && missing <= max_gap_steps) {
        const double a = out.values[prev_index];
        const double b = s.value;
        for (long k = 1; k <= missing; ++k) {
          const double w = static_cast<double>(k) / static_cast<double>(missing + 1);
          out.values[prev_index + static_cast<std::size_t>(k)] = a + w * (b - a);
        }
      }
    }
    prev_index = idx;
    have_prev = true;
  }
  return out;
}

RegularSeries resample_mean(const RegularSeries& series, Seconds step) {
  if (step < series.step || step % series.step != Seconds{0}) {
    throw Error(ErrorCode::misaligned_series, "resample step must be a multiple of the series step");
  }
  const auto per = static_cast<std::size_t>(step / series.step);
  RegularSeries out{series.start, step, {}};
  out.values.reserve(series.size() / per);
  for (std::size_t i = 0; i + per <= series.size(); i += per) {
    double sum = 0.0;
    for (std::size_t j = 0; j < per; ++j) sum += series.values[i + j];
    out.values.push_back(sum / static_cast<double>(per));
  }
  return out;
}

}  // namespace dhw
