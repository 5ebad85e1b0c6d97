#include <algorithm>
#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "dhw/error.hpp"
#include "dhw/pv_forecast.hpp"
#include "dhw/rng.hpp"

using namespace dhw;

namespace {

const Timestamp kStart = parse_timestamp("2024-05-01T00:00:00Z");
constexpr double kPeak = 4.0;

double clear_sky(Timestamp t) {
  const double h = hour_of_day(t);
  return h >= 6 && h <= 18 ? kPeak * std::sin(M_PI * (h - 6) / 12.0) : 0.0;
}

struct History {
  RegularSeries power;
  WeatherFeatures weather;
};

/// Hourly PV with one cloud factor per day; cloud cover is the weather feature.
History make_history(int days, bool cloudy, std::uint64_t seed, double noise = 0.0) {
  Rng rng(seed);
  History h{{kStart, kHour, {}}, {{"cloud_cover"}, {}, {}}};
  double cover = 0.0;
  for (int i = 0; i < days * 24; ++i) {
    const Timestamp t = kStart + kHour * i;
    if (i % 24 == 0 && cloudy) cover = rng.uniform() < 0.2 ? 0.97 : rng.uniform(0, 0.8);
    const double p = clear_sky(t) * (1 - cover) + (clear_sky(t) > 0 ? rng.normal(0, noise) : 0.0);
    h.power.values.push_back(std::clamp(p, 0.0, kPeak));
    h.weather.times.push_back(t);
    h.weather.rows.push_back({cover});
  }
  return h;
}

ForecasterParams small_params(std::uint64_t seed = 1) {
  ForecasterParams p;
  p.trees.n_trees = 10;
  p.trees.seed = seed;
  return p;
}

class ConstantRegressor final : public Regressor {
 public:
  explicit ConstantRegressor(double v) : v_(v) {}
  double predict(std::span<const double>) const override { return v_; }

 private:
  double v_;
};

class ConstantTrainer final : public RegressorTrainer {
 public:
  explicit ConstantTrainer(double v) : v_(v) {}
  std::shared_ptr<const Regressor> train(const Dataset&, std::uint64_t) const override {
    return std::make_shared<ConstantRegressor>(v_);
  }

 private:
  double v_;
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Forecaster, ConstantHistoryGivesConstantForecast) {
  History h = make_history(6, false, 1);
  std::fill(h.power.values.begin(), h.power.values.end(), 1.7);
  const auto model = train_forecaster(h.power, h.weather, small_params());
  const auto f = forecast(model, h.power.slice(h.power.time_at(96), 24), h.weather);
  ASSERT_EQ(f.size(), 24u);
  for (double v : f.values) EXPECT_NEAR(v, 1.7, 1e-12);
}

TEST(Forecaster, PeriodicHistoryIsLearnedExactly) {
  const History h = make_history(21, false, 2);
  const RegularSeries train = h.power.slice(kStart, 20 * 24);
  const auto model = train_forecaster(train, h.weather, small_params());
  const auto f = forecast(model, h.power.slice(h.power.time_at(19 * 24), 24), h.weather);
  ASSERT_EQ(f.start, kStart + 20 * kDay);
  double mae = 0;
  for (std::size_t i = 0; i < 24; ++i) mae += std::abs(f.values[i] - h.power.values[20 * 24 + i]);
  EXPECT_LT(mae / 24, 0.01 * kPeak);
}

TEST(Forecaster, NightStartsNearZero) {
  const History h = make_history(40, true, 3, 0.1);
  const auto model = train_forecaster(h.power, h.weather, small_params(4));
  // Issue at 21:00 after a day with no production.
  RegularSeries recent{kStart + 38 * kDay + 21 * kHour - 24 * kHour, kHour,
                       std::vector<double>(24, 0.0)};
  const auto f = forecast(model, recent, h.weather);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(f.values[i], 0.05 * kPeak) << i;
}

TEST(Forecaster, OutputIsClippedToTheRange) {
  const History h = make_history(5, false, 1);
  const ConstantTrainer negative(-0.3);
  const auto low = train_forecaster(h.power, h.weather, small_params(), &negative);
  for (double v : forecast(low, h.power.slice(kStart, 24), h.weather).values) EXPECT_EQ(v, 0.0);
  const ConstantTrainer huge(99.0);
  const auto high = train_forecaster(h.power, h.weather, small_params(), &huge);
  for (double v : forecast(high, h.power.slice(kStart, 24), h.weather).values) {
    EXPECT_EQ(v, high.peak_kw);
  }
  EXPECT_NEAR(high.peak_kw, kPeak, 1e-12);
}

TEST(Forecaster, Errors) {
  const History h = make_history(5, false, 1);
  WeatherFeatures later = h.weather;
  for (auto& t : later.times) t += 30 * kDay;
  EXPECT_EQ(code_of([&] { train_forecaster(h.power, later, small_params()); }),
            ErrorCode::misaligned_series);

  const auto model = train_forecaster(h.power, h.weather, small_params());
  EXPECT_EQ(code_of([&] { forecast(model, h.power.slice(kStart, 12), h.weather); }),
            ErrorCode::wrong_history_length);
  const WeatherFeatures short_weather = h.weather.between(kStart, kStart + 36 * kHour);
  EXPECT_EQ(code_of([&] { forecast(model, h.power.slice(kStart, 24), short_weather); }),
            ErrorCode::horizon_coverage);

  const RegularSeries too_short = h.power.slice(kStart, 30);
  EXPECT_EQ(code_of([&] { train_forecaster(too_short, h.weather, small_params()); }),
            ErrorCode::insufficient_data);
}

TEST(Forecaster, GappySamplesAreDropped) {
  History h = make_history(6, false, 1);
  for (std::size_t i = 30; i < 40; ++i) h.power.values[i] = std::nan("");
  EXPECT_NO_THROW(train_forecaster(h.power, h.weather, small_params()));
}

TEST(Forecaster, BoundsLengthAndDeterminism) {
  const History h = make_history(30, true, 5, 0.2);
  const auto a = train_forecaster(h.power, h.weather, small_params(9));
  const auto b = train_forecaster(h.power, h.weather, small_params(9));
  for (int issue = 24; issue + 24 <= 30 * 24; issue += 7) {
    const auto recent = h.power.slice(h.power.time_at(static_cast<std::size_t>(issue - 24)), 24);
    const auto fa = forecast(a, recent, h.weather);
    const auto fb = forecast(b, recent, h.weather);
    ASSERT_EQ(fa.size(), 24u);
    EXPECT_EQ(fa.start, recent.end());
    EXPECT_EQ(fa.step, kHour);
    EXPECT_EQ(fa.values, fb.values);
    for (double v : fa.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, a.peak_kw);
    }
  }
}

TEST(Persistence, RepeatsYesterday) {
  const History h = make_history(3, false, 1);
  const auto day = h.power.slice(kStart + kDay, 24);
  const auto p = persistence_baseline(day, 24);
  EXPECT_EQ(p.start, kStart + 2 * kDay);
  for (std::size_t i = 0; i < 24; ++i) EXPECT_EQ(p.values[i], h.power.values[48 + i]);

  const RegularSeries flat{kStart, kHour, std::vector<double>(24, 2.0)};
  for (double v : persistence_baseline(flat, 30).values) EXPECT_EQ(v, 2.0);

  const RegularSeries half{kStart, kHour, std::vector<double>(12, 2.0)};
  EXPECT_THROW(persistence_baseline(half, 24), Error);
}

TEST(Holdout, ModelBeatsPersistenceOnCloudyData) {
  const History h = make_history(42, true, 6, 0.05);
  const auto score = score_holdout(h.power, h.weather, small_params(2), 7 * kDay);
  EXPECT_EQ(score.forecasts, 7);
  EXPECT_LT(score.model_mae, score.persistence_mae);
}
