#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dhw/extra_trees.hpp"
#include "dhw/series.hpp"

namespace dhw {

/// Hourly (or other regular) weather features; column names come from the
/// data file header.
struct WeatherFeatures {
  std::vector<std::string> columns;
  std::vector<Timestamp> times;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return times.size(); }
  /// Row index for an exact timestamp match.
  std::optional<std::size_t> find(Timestamp t) const;
  /// Strictly increasing times, rectangular rows, no NaN.
  void validate() const;
  WeatherFeatures between(Timestamp from, Timestamp to) const;
};

/// Source of observed and forecast weather. Shipped implementation replays
/// recorded data; a live HTTP provider would implement the same interface.
class WeatherProvider {
 public:
  virtual ~WeatherProvider() = default;
  virtual WeatherFeatures observed(Timestamp from, Timestamp to) const = 0;
  /// Forecast issued at `issued` for [from, to).
  virtual WeatherFeatures forecast(Timestamp issued, Timestamp from, Timestamp to) const = 0;
};

class RecordedWeatherProvider final : public WeatherProvider {
 public:
  /// Without a separate forecast record, forecasts replay the observations.
  explicit RecordedWeatherProvider(WeatherFeatures observed,
                                   std::optional<WeatherFeatures> forecasts = std::nullopt);

  WeatherFeatures observed(Timestamp from, Timestamp to) const override;
  WeatherFeatures forecast(Timestamp issued, Timestamp from, Timestamp to) const override;

 private:
  WeatherFeatures observed_;
  std::optional<WeatherFeatures> forecasts_;
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> x) const = 0;
};

class RegressorTrainer {
 public:
  virtual ~RegressorTrainer() = default;
  /// `stream` distinguishes the models trained within one call site.
  virtual std::shared_ptr<const Regressor> train(const Dataset& data,
                                                 std::uint64_t stream) const = 0;
};

class ExtraTreesRegressor final : public Regressor {
 public:
  explicit ExtraTreesRegressor(TrainedEnsemble model) : model_(std::move(model)) {}
  double predict(std::span<const double> x) const override { return model_.predict(x); }
  const TrainedEnsemble& model() const { return model_; }

 private:
  TrainedEnsemble model_;
};

class ExtraTreesTrainer final : public RegressorTrainer {
 public:
  explicit ExtraTreesTrainer(TreeParams params) : params_(params) {}
  std::shared_ptr<const Regressor> train(const Dataset& data, std::uint64_t stream) const override;

 private:
  TreeParams params_;
};

struct ForecasterParams {
  int n_history = 24;
  int k_horizon = 24;
  std::optional<double> peak_kw;  // defaults to the largest observed power
  TreeParams trees{};

  void validate() const;
};

/// Direct multi-horizon forecaster: one regressor per output step over
/// (lagged power, weather at the target step, target hour of day).
struct ForecastModel {
  int n_history = 24;
  int k_horizon = 24;
  Seconds step{kHour};
  double peak_kw = 0.0;
  std::vector<std::string> weather_columns;
  std::vector<std::shared_ptr<const Regressor>> per_step;
};

ForecastModel train_forecaster(const RegularSeries& power_history,
                               const WeatherFeatures& weather_history,
                               const ForecasterParams& params,
                               const RegressorTrainer* trainer = nullptr);

/// Forecast starting at recent_power.end(); values clipped to [0, peak].
ForecastSeries forecast(const ForecastModel& model, const RegularSeries& recent_power,
                        const WeatherFeatures& weather_forecast);

/// Repeats the value observed 24 h before each horizon step.
ForecastSeries persistence_baseline(const RegularSeries& recent_power, int k_horizon);

struct HoldoutScore {
  double model_mae = 0.0;        // kW
  double persistence_mae = 0.0;  // kW
  int forecasts = 0;             // one per day of the holdout
  ForecastModel model;           // trained on the data before the holdout
};

/// Trains on everything before the final `holdout` span, then issues one
/// k_horizon forecast at each midnight of the holdout from observed weather.
/// `power` must be hourly-aligned at the model step.
HoldoutScore score_holdout(const RegularSeries& power, const WeatherFeatures& weather,
                           const ForecasterParams& params, Seconds holdout);

/// Feature vector used by the per-step regressors (exposed for tests).
std::vector<double> forecaster_features(std::span<const double> lags,
                                        std::span<const double> weather_row,
                                        Timestamp target_time);

}  // namespace dhw
