#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "dhw/buffer.hpp"
#include "dhw/fqi.hpp"
#include "dhw/loss_model.hpp"
#include "dhw/pv_forecast.hpp"
#include "dhw/tap_model.hpp"

namespace dhw {

enum class Scenario { thermostat, active };

std::string_view to_string(Scenario s);
/// Accepts "thermostat" or "active"; throws validation otherwise.
Scenario scenario_from_string(std::string_view name);

struct ControllerConfig {
  Seconds refit_period{kHour};
  Seconds act_period{5 * kMinute};
  int horizon_hours = 24;
  Scenario scenario = Scenario::active;

  void validate() const;
  int horizon_steps() const;
};

struct ThermostatConfig {
  double setpoint = 45.0;  // °C
  void validate(const BufferParams& params) const;
};

/// A command for the heat pump. Delay carries no target.
struct Command {
  Action action = Action::delay;
  std::optional<double> target_soc;
};

/// Default thermostat: when the mid-buffer sensor reads below the setpoint
/// and nothing is charging, recharge to a uniform setpoint temperature.
std::optional<Command> thermostat_tick(Timestamp now, const BufferState& state,
                                       const ThermostatConfig& config, const BufferParams& params);

/// What the active controller may look at when it refits. Everything here
/// must already have been observed at the tick time.
struct ControllerData {
  std::span<const TapRecord> tap_history;
  std::span<const LossObservation> loss_history;
  const RegularSeries* pv_history = nullptr;  // at the forecaster step
  const WeatherProvider* weather = nullptr;
  double feed_temperature = 10.0;
};

struct ActiveSettings {
  ControllerConfig controller{};
  FqiConfig fqi{};
  Seconds tap_window{60 * kDay};
  BufferParams params{};
  ThermostatConfig fallback{};
};

struct TickOutcome {
  std::optional<Command> command;
  bool refitted = false;
  bool used_fallback = false;
};

/// Receding-horizon controller. On every refit boundary it refits the tap and
/// loss models, forecasts PV and runs fitted Q-iteration; between refits it
/// acts greedily on the current policy.
class ActiveController {
 public:
  ActiveController(ActiveSettings settings, std::optional<ForecastModel> forecaster = std::nullopt);

  void set_forecaster(ForecastModel model) { forecaster_ = std::move(model); }

  TickOutcome tick(Timestamp now, const BufferState& state, const ControllerData& data);

  const Policy* policy() const { return policy_ ? &*policy_ : nullptr; }
  /// Increments on each successful refit; 0 before the first one.
  int policy_id() const { return policy_id_; }
  int forecast_failures() const { return forecast_failures_; }
  const ActiveSettings& settings() const { return settings_; }

 private:
  void refit(Timestamp now, const ControllerData& data);

  ActiveSettings settings_;
  std::optional<ForecastModel> forecaster_;
  std::optional<Policy> policy_;
  std::optional<Timestamp> last_refit_;
  int policy_id_ = 0;
  int forecast_failures_ = 0;
};

/// One line of the command log.
struct CommandRecord {
  Timestamp time;
  int house = 0;
  Scenario scenario = Scenario::thermostat;
  Action action = Action::delay;
  double soc_before = 0.0;
  int policy_id = 0;
};

}  // namespace dhw
