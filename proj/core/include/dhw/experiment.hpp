#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dhw/buffer.hpp"
#include "dhw/controller.hpp"
#include "dhw/fqi.hpp"
#include "dhw/pv_forecast.hpp"
#include "dhw/series.hpp"

namespace dhw {

// Synthetic houses -----------------------------------------------------------

/// A cluster of draws around a clock time. The number of draws per day is
/// Poisson; each draw's volume is normal, truncated at zero.
struct TapCluster {
  double hour = 7.0;
  double spread_hours = 0.5;
  double draws_per_day = 2.0;
  double liters_mean = 20.0;
  double liters_sd = 5.0;
};

struct HouseArchetype {
  std::string name = "house";
  BufferParams buffer{};
  double feed_temperature = 10.0;
  double pv_peak_kw = 4.0;
  double sunrise_hour = 7.0;
  double sunset_hour = 19.0;
  /// Mean cloud cover; 0 gives clear-sky days only.
  double cloudiness = 0.35;
  std::vector<TapCluster> weekday_taps{{7.0, 0.5, 2.0, 25.0, 6.0}, {20.0, 1.0, 3.0, 20.0, 6.0}};
  /// Weekend clusters are the weekday ones shifted later by this much.
  double weekend_shift_hours = 1.5;
  double sh_kw_per_kelvin = 0.15;  // below 16 °C outdoor temperature
  double noncontrollable_base_kw = 0.25;
  double noncontrollable_peak_kw = 0.6;
};

/// Everything needed to simulate a house. Traces run at `step` from
/// `history_start`; the span before the experiment start is pre-history the
/// controller may learn from.
struct HouseProfile {
  std::string name;
  BufferParams buffer{};
  double feed_temperature = 10.0;
  double pv_peak_kw = 0.0;
  Timestamp history_start{};
  Seconds step{5 * kMinute};
  RegularSeries taps;             // liters per step
  RegularSeries pv;               // kW
  RegularSeries sh;               // kW
  RegularSeries noncontrollable;  // kW
  WeatherFeatures weather;           // hourly observations
  WeatherFeatures weather_forecast;  // hourly, as forecast the day before

  /// Throws trace_coverage unless every trace covers [from, to).
  void check_coverage(Timestamp from, Timestamp to) const;
};

HouseProfile synth_house(const HouseArchetype& archetype, Timestamp history_start, int days,
                         std::uint64_t seed);

/// Six varied archetypes used by the default experiment.
std::vector<HouseArchetype> default_archetypes();

// Experiment -----------------------------------------------------------------

struct ExperimentConfig {
  Timestamp start{};  // beginning of the warm-up
  int weeks = 4;      // measured weeks, after the warm-up
  int warmup_weeks = 1;
  Scenario first_scenario = Scenario::thermostat;
  ControllerConfig controller{};
  FqiConfig fqi{};
  ThermostatConfig thermostat{};
  Seconds tap_window{60 * kDay};
  Seconds loss_window{7 * kDay};
  ForecasterParams forecaster{};
  int threads = 1;

  void validate() const;
  Timestamp measured_start() const { return start + kWeek * warmup_weeks; }
  Timestamp end() const { return measured_start() + kWeek * weeks; }
  Scenario scenario_at(Timestamp t) const;
};

struct LedgerRow {
  Timestamp time;
  int house = 0;
  Scenario scenario = Scenario::thermostat;
  double pv_kw = 0.0;
  double dhw_kw = 0.0;
  double sh_kw = 0.0;
  double nc_kw = 0.0;
  std::optional<Action> action;  // none while a charge is in progress or idle
  double soc = 0.0;              // at the end of the step
};

struct ExperimentLedger {
  Seconds step{5 * kMinute};
  std::vector<LedgerRow> rows;
};

/// Tap events served late: a draw taken while SoC has stayed below zero for
/// longer than the recovery window of the recharge in progress.
struct ComfortReport {
  long tap_events = 0;
  long late_tap_events = 0;
  /// Longest wait between SoC reaching zero and a recharge starting.
  Seconds max_buc_latency{0};
};

struct PolicyMapRow {
  int house = 0;
  Timestamp issued;
  int stage = 0;
  double soc = 0.0;
  Action action = Action::delay;
};

struct HouseRun {
  std::vector<LedgerRow> ledger;
  std::vector<CommandRecord> commands;
  ComfortReport comfort;
  std::vector<PolicyMapRow> policy_map;
  int refits = 0;
  int forecast_failures = 0;
};

struct ExperimentResult {
  ExperimentLedger ledger;
  std::vector<CommandRecord> commands;
  ComfortReport comfort;
  std::vector<PolicyMapRow> policy_map;
};

/// Simulates one house through warm-up and measured weeks. `seed` drives the
/// controller's sampling; the house traces are fixed inputs.
HouseRun simulate_house(const HouseProfile& house, int house_index, const ExperimentConfig& config,
                        std::uint64_t seed);

/// Houses run independently (in parallel when config.threads > 1); results
/// do not depend on the thread count.
ExperimentResult run_experiment(const std::vector<HouseProfile>& houses,
                                const ExperimentConfig& config, std::uint64_t seed);

// Indicators -----------------------------------------------------------------

struct ScenarioKpis {
  Scenario scenario = Scenario::thermostat;
  double days = 0.0;  // house-days
  double pv_captured_by_dhw = 0.0;    // %
  double pv_captured_by_total = 0.0;  // %
  double pv_captured_by_sh = 0.0;     // %
  double el_consumption_per_day = 0.0;  // kWh, DHW heat pump
  double pv_production_per_day = 0.0;   // kWh
  double sh_consumption_per_day = 0.0;  // kWh
};

struct KpiReport {
  ScenarioKpis thermostat;
  ScenarioKpis active;
  const ScenarioKpis& of(Scenario s) const { return s == Scenario::active ? active : thermostat; }
};

KpiReport compute_kpis(const ExperimentLedger& ledger);

/// Average powers per scenario and clock hour.
struct HourlyProfileRow {
  Scenario scenario = Scenario::thermostat;
  int hour = 0;
  double pv_kw = 0.0;
  double dhw_kw = 0.0;
  double sh_kw = 0.0;
  double total_kw = 0.0;
};

std::vector<HourlyProfileRow> hourly_profiles(const ExperimentLedger& ledger);

}  // namespace dhw
