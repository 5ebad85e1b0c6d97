#include "dhw/time.hpp"

#include <charconv>
#include <cstdio>

#include "dhw/error.hpp"

namespace dhw {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  bool ok = text.size() >= 16 && read_int(text, 0, 4, y) && text[4] == '-' &&
            read_int(text, 5, 2, mo) && text[7] == '-' && read_int(text, 8, 2, d) &&
            (text[10] == 'T' || text[10] == ' ') && read_int(text, 11, 2, h) &&
            text[13] == ':' && read_int(text, 14, 2, mi);
  if (ok && text.size() > 16) {
    ok = text.size() == 19 && text[16] == ':' && read_int(text, 17, 2, s);
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw Error(ErrorCode::schema_violation,
                "malformed ISO-8601 timestamp '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + Seconds{s};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp floor_to(Timestamp t, Seconds step) {
  const auto count = t.time_since_epoch().count();
  auto q = count / step.count();
  if (count % step.count() < 0) --q;
  return Timestamp{step * q};
}

TimeFeature TimeFeature::from_index(std::size_t index) {
  return TimeFeature{static_cast<int>(index % 24),
                     index >= 24 ? DayType::weekend : DayType::weekday};
}

int hour_of_day(Timestamp t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  return static_cast<int>(duration_cast<hours>(t - day_start).count());
}

TimeFeature time_feature(Timestamp t) {
  using namespace std::chrono;
  const weekday wd{floor<days>(t)};
  const bool weekend = wd == Saturday || wd == Sunday;
  return TimeFeature{hour_of_day(t), weekend ? DayType::weekend : DayType::weekday};
}

}  // namespace dhw
