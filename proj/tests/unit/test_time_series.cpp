#include <cmath>

#include <gtest/gtest.h>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"
#include "dhw/series.hpp"
#include "dhw/time.hpp"

using namespace dhw;

TEST(Time, ParsesAndFormatsUtc) {
  const Timestamp t = parse_timestamp("2024-04-29T07:05:00Z");
  EXPECT_EQ(format_timestamp(t), "2024-04-29T07:05:00Z");
  EXPECT_EQ(parse_timestamp("2024-04-29 07:05"), t);
  EXPECT_EQ(parse_timestamp("2024-04-29T07:05:00"), t);
}

TEST(Time, RejectsMalformedTimestamps) {
  for (const char* bad : {"", "2024-04-29", "2024-13-01T00:00:00Z", "2024-02-30T00:00:00Z",
                          "2024-04-29T24:00:00Z", "2024/04/29T00:00:00Z", "2024-04-29T00:00:0"}) {
    EXPECT_THROW(parse_timestamp(bad), Error) << bad;
  }
}

TEST(Time, FeaturesSplitWeekdaysFromWeekends) {
  // 2024-04-29 was a Monday, 2024-05-04 a Saturday.
  const auto mon = time_feature(parse_timestamp("2024-04-29T07:30:00Z"));
  EXPECT_EQ(mon.hour, 7);
  EXPECT_EQ(mon.day_type, DayType::weekday);
  const auto sat = time_feature(parse_timestamp("2024-05-04T23:59:00Z"));
  EXPECT_EQ(sat.hour, 23);
  EXPECT_EQ(sat.day_type, DayType::weekend);
  EXPECT_EQ(time_feature(parse_timestamp("2024-05-05T00:00:00Z")).day_type, DayType::weekend);
  for (std::size_t i = 0; i < kTimeFeatureCount; ++i) {
    EXPECT_EQ(TimeFeature::from_index(i).index(), i);
  }
}

TEST(Time, FloorsToStep) {
  const Timestamp t = parse_timestamp("2024-04-29T07:47:13Z");
  EXPECT_EQ(format_timestamp(floor_to(t, kHour)), "2024-04-29T07:00:00Z");
  EXPECT_EQ(format_timestamp(floor_to(t, 5 * kMinute)), "2024-04-29T07:45:00Z");
  EXPECT_EQ(format_timestamp(floor_to(t, kDay)), "2024-04-29T00:00:00Z");
}

TEST(Series, IndexesHalfOpenIntervals) {
  const RegularSeries s{parse_timestamp("2024-01-01T00:00:00Z"), kHour, {1, 2, 3}};
  EXPECT_EQ(s.at(s.start), 1);
  EXPECT_EQ(s.at(s.start + kHour - Seconds{1}), 1);
  EXPECT_EQ(s.at(s.start + 2 * kHour), 3);
  EXPECT_EQ(s.index_of(s.end()), 3u);
  EXPECT_THROW(s.at(s.end()), Error);
  const auto tail = s.slice(s.start + kHour, 2);
  EXPECT_EQ(tail.values, (std::vector<double>{2, 3}));
  EXPECT_THROW(s.slice(s.start + kHour, 3), Error);
  EXPECT_THROW(s.slice(s.start + kMinute, 1), Error);
}

TEST(Series, RegularizeInterpolatesShortGapsOnly) {
  const Timestamp t0 = parse_timestamp("2024-01-01T00:00:00Z");
  std::vector<TimedValue> v{{t0, 0.0}, {t0 + 3 * kHour, 3.0}, {t0 + 8 * kHour, 8.0}};
  const auto s = regularize(v, kHour);
  ASSERT_EQ(s.size(), 9u);
  EXPECT_DOUBLE_EQ(s.values[1], 1.0);
  EXPECT_DOUBLE_EQ(s.values[2], 2.0);
  // A gap of four missing steps exceeds the three-step limit.
  for (int i = 4; i < 8; ++i) EXPECT_TRUE(std::isnan(s.values[static_cast<std::size_t>(i)]));
  EXPECT_DOUBLE_EQ(s.values[8], 8.0);

  std::vector<TimedValue> off{{t0, 0.0}, {t0 + 90 * kMinute, 1.0}};
  EXPECT_THROW(regularize(off, kHour), Error);
}

TEST(Series, ResampleMeanAveragesBlocks) {
  const RegularSeries s{parse_timestamp("2024-01-01T00:00:00Z"), 30 * kMinute, {1, 3, 5, 7, 9}};
  const auto h = resample_mean(s, kHour);
  EXPECT_EQ(h.step, kHour);
  EXPECT_EQ(h.values, (std::vector<double>{2, 6}));
  EXPECT_THROW(resample_mean(s, 45 * kMinute), Error);
}

TEST(Rng, DerivedStreamsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, IndexIsUniform) {
  Rng rng(11);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.index(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7, 5 * std::sqrt(n / 7.0));
}

TEST(Rng, NormalAndPoissonMoments) {
  Rng rng(5);
  double sum = 0, sq = 0, psum = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    sum += x;
    sq += x * x;
    psum += rng.poisson(2.5);
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 2.0, 0.06);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), 3.0, 0.06);
  EXPECT_NEAR(psum / n, 2.5, 0.05);
}
