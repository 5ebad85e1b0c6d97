#include "dhw/pv_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

std::optional<std::size_t> WeatherFeatures::find(Timestamp t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

void WeatherFeatures::validate() const {
  if (rows.size() != times.size()) {
    throw Error(ErrorCode::schema_violation, "weather rows and timestamps differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0 && times[i] <= times[i - 1]) {
      throw Error(ErrorCode::misaligned_series,
                  "weather timestamps must be strictly increasing (row " + std::to_string(i) + ")");
    }
    if (rows[i].size() != columns.size()) {
      throw Error(ErrorCode::schema_violation, "weather row " + std::to_string(i) +
                                                   " has the wrong number of columns");
    }
    for (double v : rows[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::schema_violation,
                    "missing weather value in row " + std::to_string(i));
      }
    }
  }
}

WeatherFeatures WeatherFeatures::between(Timestamp from, Timestamp to) const {
  WeatherFeatures out{columns, {}, {}};
  const auto first = std::lower_bound(times.begin(), times.end(), from);
  for (auto it = first; it != times.end() && *it < to; ++it) {
    out.times.push_back(*it);
    out.rows.push_back(rows[static_cast<std::size_t>(it - times.begin())]);
  }
  return out;
}

RecordedWeatherProvider::RecordedWeatherProvider(WeatherFeatures observed,
                                                 std::optional<WeatherFeatures> forecasts)
    : observed_(std::move(observed)), forecasts_(std::move(forecasts)) {
  observed_.validate();
  if (forecasts_) {
    forecasts_->validate();
    if (forecasts_->columns != observed_.columns) {
      throw Error(ErrorCode::schema_violation, "forecast and observed weather columns differ");
    }
  }
}

WeatherFeatures RecordedWeatherProvider::observed(Timestamp from, Timestamp to) const {
  return observed_.between(from, to);
}

WeatherFeatures RecordedWeatherProvider::forecast(Timestamp, Timestamp from, Timestamp to) const {
  return (forecasts_ ? *forecasts_ : observed_).between(from, to);
}

std::shared_ptr<const Regressor> ExtraTreesTrainer::train(const Dataset& data,
                                                          std::uint64_t stream) const {
  TreeParams p = params_;
  p.seed = derive_seed(params_.seed, {stream});
  return std::make_shared<ExtraTreesRegressor>(fit_extra_trees(data, p));
}

void ForecasterParams::validate() const {
  if (n_history < 1) throw Error(ErrorCode::validation, "forecast.n_history must be >= 1");
  if (k_horizon < 1) throw Error(ErrorCode::validation, "forecast.k_horizon must be >= 1");
  if (peak_kw && *peak_kw < 0.0) throw Error(ErrorCode::validation, "forecast peak must be >= 0");
  trees.validate();
}

std::vector<double> forecaster_features(std::span<const double> lags,
                                        std::span<const double> weather_row,
                                        Timestamp target_time) {
  std::vector<double> x(lags.begin(), lags.end());
  x.insert(x.end(), weather_row.begin(), weather_row.end());
  x.push_back(static_cast<double>(hour_of_day(target_time)));
  return x;
}

ForecastModel train_forecaster(const RegularSeries& power_history,
                               const WeatherFeatures& weather_history,
                               const ForecasterParams& params, const RegressorTrainer* trainer) {
  params.validate();
  weather_history.validate();
  if (power_history.size() == 0 || weather_history.size() == 0) {
    throw Error(ErrorCode::insufficient_data, "empty power or weather history");
  }
  if (weather_history.times.back() < power_history.start ||
      weather_history.times.front() >= power_history.end()) {
    throw Error(ErrorCode::misaligned_series, "power and weather histories do not overlap");
  }

  const auto n = static_cast<std::size_t>(params.n_history);
  const auto k = static_cast<std::size_t>(params.k_horizon);
  const std::size_t dim = n + weather_history.columns.size() + 1;
  std::vector<Dataset> sets(k, Dataset(dim));

  const auto& p = power_history.values;
  for (std::size_t i = n; i + k <= p.size(); ++i) {
    bool usable = true;
    for (std::size_t j = i - n; j < i + k && usable; ++j) usable = std::isfinite(p[j]);
    if (!usable) continue;
    std::vector<std::size_t> rows(k);
    for (std::size_t h = 0; h < k && usable; ++h) {
      const auto r = weather_history.find(power_history.time_at(i + h));
      if (!r) usable = false; else rows[h] = *r;
    }
    if (!usable) continue;
    const std::span<const double> lags(p.data() + (i - n), n);
    for (std::size_t h = 0; h < k; ++h) {
      sets[h].add(forecaster_features(lags, weather_history.rows[rows[h]],
                                      power_history.time_at(i + h)),
                  p[i + h]);
    }
  }
  if (sets.front().size() == 0) {
    throw Error(ErrorCode::insufficient_data,
                "histories too short or too gappy to form a single training sample");
  }

  ForecastModel model;
  model.n_history = params.n_history;
  model.k_horizon = params.k_horizon;
  model.step = power_history.step;
  model.weather_columns = weather_history.columns;
  if (params.peak_kw) {
    model.peak_kw = *params.peak_kw;
  } else {
    for (double v : p) if (std::isfinite(v)) model.peak_kw = std::max(model.peak_kw, v);
  }
  const ExtraTreesTrainer fallback(params.trees);
  const RegressorTrainer& t = trainer ? *trainer : fallback;
  for (std::size_t h = 0; h < k; ++h) model.per_step.push_back(t.train(sets[h], h));
  return model;
}

ForecastSeries forecast(const ForecastModel& model, const RegularSeries& recent_power,
                        const WeatherFeatures& weather_forecast) {
  if (recent_power.size() != static_cast<std::size_t>(model.n_history)) {
    throw Error(ErrorCode::wrong_history_length,
                "expected " + std::to_string(model.n_history) + " recent power values, got " +
                    std::to_string(recent_power.size()));
  }
  if (recent_power.step != model.step) {
    throw Error(ErrorCode::misaligned_series, "recent power step differs from the model step");
  }
  if (weather_forecast.columns != model.weather_columns) {
    throw Error(ErrorCode::schema_violation, "weather forecast columns differ from training");
  }
  for (double v : recent_power.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::insufficient_data, "recent power has gaps");
  }
  ForecastSeries out{recent_power.end(), model.step, {}};
  out.values.reserve(model.per_step.size());
  for (std::size_t h = 0; h < model.per_step.size(); ++h) {
    const Timestamp target = out.time_at(h);
    const auto row = weather_forecast.find(target);
    if (!row) {
      throw Error(ErrorCode::horizon_coverage,
                  "weather forecast lacks " + format_timestamp(target));
    }
    const auto x = forecaster_features(recent_power.values, weather_forecast.rows[*row], target);
    out.values.push_back(std::clamp(model.per_step[h]->predict(x), 0.0, model.peak_kw));
  }
  return out;
}

ForecastSeries persistence_baseline(const RegularSeries& recent_power, int k_horizon) {
  if (k_horizon < 1) throw Error(ErrorCode::invalid_argument, "k_horizon must be >= 1");
  const auto lag = static_cast<std::size_t>(kDay / recent_power.step);
  if (lag == 0 || recent_power.size() < lag) {
    throw Error(ErrorCode::insufficient_data, "persistence needs 24 h of history");
  }
  ForecastSeries out{recent_power.end(), recent_power.step, {}};
  const std::size_t base = recent_power.size() - lag;
  for (std::size_t h = 0; h < static_cast<std::size_t>(k_horizon); ++h) {
    out.values.push_back(recent_power.values[base + h % lag]);
  }
  return out;
}

HoldoutScore score_holdout(const RegularSeries& power, const WeatherFeatures& weather,
                           const ForecasterParams& params, Seconds holdout) {
  params.validate();
  if (holdout < kDay || holdout % kDay != Seconds{0}) {
    throw Error(ErrorCode::invalid_argument, "holdout must be a whole number of days");
  }
  const Timestamp split = floor_to(power.end() - holdout, kDay);
  if (split <= power.start) throw Error(ErrorCode::insufficient_data, "no data before the holdout");
  const auto train_n = static_cast<std::size_t>((split - power.start) / power.step);

  HoldoutScore score;
  score.model = train_forecaster(power.slice(power.start, train_n),
                                 weather.between(power.start, split), params);

  const auto n = static_cast<std::size_t>(params.n_history);
  const auto k = static_cast<std::size_t>(params.k_horizon);
  const auto lag = static_cast<std::size_t>(kDay / power.step);
  double model_err = 0.0, persistence_err = 0.0;
  std::size_t count = 0;
  for (Timestamp t = split; t + power.step * static_cast<long>(k) <= power.end(); t += kDay) {
    const std::size_t i = power.index_of(t);
    if (i < std::max(n, lag)) continue;
    const RegularSeries recent = power.slice(power.time_at(i - n), n);
    const RegularSeries day = power.slice(power.time_at(i - lag), lag);
    const ForecastSeries f = forecast(score.model, recent, weather);
    const ForecastSeries base = persistence_baseline(day, params.k_horizon);
    for (std::size_t h = 0; h < k; ++h) {
      model_err += std::abs(f.values[h] - power.values[i + h]);
      persistence_err += std::abs(base.values[h] - power.values[i + h]);
    }
    count += k;
    ++score.forecasts;
  }
  if (count == 0) throw Error(ErrorCode::insufficient_data, "holdout too short for one forecast");
  score.model_mae = model_err / static_cast<double>(count);
  score.persistence_mae = persistence_err / static_cast<double>(count);
  return score;
}

}  // namespace dhw
