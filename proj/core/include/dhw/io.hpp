#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dhw/buffer.hpp"
#include "dhw/controller.hpp"
#include "dhw/experiment.hpp"
#include "dhw/fqi.hpp"
#include "dhw/pv_forecast.hpp"
#include "dhw/tap_model.hpp"

namespace dhw {

// CSV ------------------------------------------------------------------------
//
// Every file has a mandatory header row, comma separators and ISO-8601 UTC
// timestamps. Schema errors name the 1-based line of the file.

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

std::vector<TapRecord> read_tap_csv(const std::filesystem::path& path);
void write_tap_csv(const std::filesystem::path& path, const std::vector<TapRecord>& taps);

std::vector<TimedValue> read_pv_csv(const std::filesystem::path& path);
void write_pv_csv(const std::filesystem::path& path, const RegularSeries& pv);

WeatherFeatures read_weather_csv(const std::filesystem::path& path);
void write_weather_csv(const std::filesystem::path& path, const WeatherFeatures& weather);

struct LoadRecord {
  Timestamp time;
  double sh_kw = 0.0;
  double noncontrollable_kw = 0.0;
};
std::vector<LoadRecord> read_loads_csv(const std::filesystem::path& path);
void write_loads_csv(const std::filesystem::path& path, const RegularSeries& sh,
                     const RegularSeries& noncontrollable);

ExperimentLedger read_ledger_csv(const std::filesystem::path& path);
void write_ledger_csv(const std::filesystem::path& path, const ExperimentLedger& ledger);

KpiReport read_kpis_csv(const std::filesystem::path& path);
void write_kpis_csv(const std::filesystem::path& path, const KpiReport& kpis);

void write_commands_csv(const std::filesystem::path& path,
                        const std::vector<CommandRecord>& commands);
void write_policy_map_csv(const std::filesystem::path& path,
                          const std::vector<PolicyMapRow>& rows);
void write_hourly_profiles_csv(const std::filesystem::path& path,
                               const std::vector<HourlyProfileRow>& rows);

struct QSurfaceRow {
  int stage = 0;
  double soc = 0.0;
  Action action = Action::delay;
  double q_value = 0.0;
};
/// Q evaluated over stages 1..T, the given SoC points and every action.
std::vector<QSurfaceRow> q_surface(const Policy& policy, const std::vector<double>& soc_points);
void write_qsurface_csv(const std::filesystem::path& path, const std::vector<QSurfaceRow>& rows);
std::vector<QSurfaceRow> read_qsurface_csv(const std::filesystem::path& path);

/// Builds a house from ingested data. Taps are summed per step, PV and loads
/// are put on the step grid, and weather doubles as its own forecast.
HouseProfile house_from_data(std::string name, const BufferParams& buffer, double feed_temperature,
                             const std::vector<TapRecord>& taps,
                             const std::vector<TimedValue>& pv,
                             const std::vector<LoadRecord>& loads,
                             const WeatherFeatures& weather, Seconds step);

// Forecast models ------------------------------------------------------------

/// Only extra-trees regressors can be serialized.
std::string forecast_model_to_json(const ForecastModel& model);
ForecastModel forecast_model_from_json(const std::string& text);

// Run configuration ------------------------------------------------------------

struct RunConfig {
  BufferParams buffer{};
  double feed_temperature = 10.0;
  ThermostatConfig thermostat{};
  ControllerConfig controller{};
  FqiConfig fqi{};
  ForecasterParams forecaster{};
  int tap_window_days = 60;
  int loss_window_days = 7;

  int weeks = 4;
  int warmup_weeks = 1;
  int houses = 6;
  int prehistory_days = 28;
  Timestamp start = parse_timestamp("2024-04-29T00:00:00Z");
  Scenario first_scenario = Scenario::thermostat;

  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> tap_csv;
  std::optional<std::filesystem::path> pv_csv;
  std::optional<std::filesystem::path> weather_csv;
  std::optional<std::filesystem::path> loads_csv;
  std::filesystem::path out_dir = "out";

  /// Throws validation with the offending key.
  void validate() const;
  ExperimentConfig experiment() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys and
/// unparsable values raise validation errors naming the line.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Synthetic houses for a run: archetypes cycled with the config's buffer,
/// traces covering pre-history, warm-up and the measured weeks.
std::vector<HouseProfile> synth_houses(const RunConfig& config);

}  // namespace dhw
