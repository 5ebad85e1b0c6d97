#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>

namespace dhw {

using Seconds = std::chrono::seconds;
using Timestamp = std::chrono::sys_seconds;

inline constexpr Seconds kMinute{60};
inline constexpr Seconds kHour{3600};
inline constexpr Seconds kDay{86400};
inline constexpr Seconds kWeek{7 * 86400};

/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z]` and the same with a space separator.
/// Timestamps are always UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

inline double to_hours(Seconds s) { return static_cast<double>(s.count()) / 3600.0; }

Timestamp floor_to(Timestamp t, Seconds step);

enum class DayType { weekday = 0, weekend = 1 };

/// Hour-of-day (clock hour 0..23) and weekday/weekend flag; 48 values.
struct TimeFeature {
  int hour = 0;
  DayType day_type = DayType::weekday;

  std::size_t index() const { return static_cast<std::size_t>(day_type) * 24 + hour; }
  static TimeFeature from_index(std::size_t index);

  friend bool operator==(const TimeFeature&, const TimeFeature&) = default;
};

inline constexpr std::size_t kTimeFeatureCount = 48;

TimeFeature time_feature(Timestamp t);
int hour_of_day(Timestamp t);

}  // namespace dhw
