#include "dhw/controller.hpp"

#include <string>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

std::string_view to_string(Scenario s) {
  return s == Scenario::active ? "active" : "thermostat";
}

Scenario scenario_from_string(std::string_view name) {
  if (name == "active") return Scenario::active;
  if (name == "thermostat") return Scenario::thermostat;
  throw Error(ErrorCode::validation, "unknown scenario '" + std::string(name) + "'");
}

void ControllerConfig::validate() const {
  if (refit_period <= Seconds{0} || act_period <= Seconds{0}) {
    throw Error(ErrorCode::validation, "controller periods must be positive");
  }
  if (refit_period % act_period != Seconds{0}) {
    throw Error(ErrorCode::validation, "controller.act_period must divide controller.refit_period");
  }
  if (horizon_hours < 1 || (horizon_hours * kHour) % refit_period != Seconds{0}) {
    throw Error(ErrorCode::validation,
                "controller.horizon must be a positive multiple of the refit period");
  }
}

int ControllerConfig::horizon_steps() const {
  return static_cast<int>((horizon_hours * kHour) / refit_period);
}

void ThermostatConfig::validate(const BufferParams& params) const {
  if (!(setpoint >= params.t_min && setpoint <= params.t_max)) {
    throw Error(ErrorCode::validation, "thermostat.setpoint must lie in [t_min, t_max]");
  }
}

std::optional<Command> thermostat_tick(Timestamp, const BufferState& state,
                                       const ThermostatConfig& config,
                                       const BufferParams& params) {
  if (state.charging) return std::nullopt;
  if (sensor_temperature(state, params) >= config.setpoint) return std::nullopt;
  return Command{Action::charge_min, soc_of_uniform(config.setpoint, params, state.t_in)};
}

ActiveController::ActiveController(ActiveSettings settings, std::optional<ForecastModel> forecaster)
    : settings_(std::move(settings)), forecaster_(std::move(forecaster)) {
  settings_.controller.validate();
  settings_.params.validate();
  settings_.fallback.validate(settings_.params);
  if (settings_.fqi.step != settings_.controller.refit_period) {
    throw Error(ErrorCode::validation, "fqi.step must equal controller.refit_period");
  }
  settings_.fqi.horizon_steps = settings_.controller.horizon_steps();
  settings_.fqi.validate();
}

void ActiveController::refit(Timestamp now, const ControllerData& data) {
  last_refit_ = now;
  const auto& fqi = settings_.fqi;
  // Off-boundary refits (the first tick) plan from the boundary just passed,
  // so the stage index stays on the clock grid.
  const Timestamp origin = floor_to(now, fqi.step);

  std::optional<ForecastSeries> pv;
  if (forecaster_ && data.pv_history && data.weather) {
    try {
      const Seconds step = forecaster_->step;
      const Timestamp issue = floor_to(now, step);
      const auto lag = step * forecaster_->n_history;
      const RegularSeries recent = data.pv_history->slice(issue - lag, forecaster_->n_history);
      const auto weather =
          data.weather->forecast(issue, issue, issue + step * forecaster_->k_horizon);
      auto f = forecast(*forecaster_, recent, weather);
      if (!f.covers(origin, origin + fqi.step * fqi.horizon_steps)) {
        throw Error(ErrorCode::horizon_coverage, "forecast shorter than the planning horizon");
      }
      pv = std::move(f);
    } catch (const Error&) {
      // Falls through to the degraded mode below.
    }
  }
  if (!pv) {
    // Keep the previous policy; its stage index keeps advancing with time.
    ++forecast_failures_;
    return;
  }

  const TapModel taps = fit_tap_model(data.tap_history, settings_.tap_window, fqi.step);
  const LossModel loss = fit_loss_model(data.loss_history);
  FqiConfig config = fqi;
  config.seed = derive_seed(fqi.seed, {static_cast<std::uint64_t>(now.time_since_epoch().count())});
  const PlanningModel model(settings_.params, data.feed_temperature, loss, std::move(*pv), origin,
                            config.step, config.horizon_steps);
  policy_ = fit_policy(config, model, taps, ExtraTreesQRegressor(config.trees));
  ++policy_id_;
}

TickOutcome ActiveController::tick(Timestamp now, const BufferState& state,
                                   const ControllerData& data) {
  TickOutcome out;
  const auto refit_period = settings_.controller.refit_period;
  const bool boundary = now.time_since_epoch() % refit_period == Seconds{0};
  if ((boundary && last_refit_ != now) || !last_refit_) {
    refit(now, data);
    out.refitted = true;
  }
  if (state.charging) return out;

  if (!policy_) {
    out.used_fallback = true;
    out.command = thermostat_tick(now, state, settings_.fallback, settings_.params);
    if (!out.command) out.command = Command{};
    return out;
  }
  const int stage = policy_->stage_at(now);
  const Action u = policy_->greedy_action(stage, soc(state, settings_.params));
  const auto target = action_target_soc(u, state, settings_.params);
  out.command = target ? Command{u, target} : Command{};
  return out;
}

}  // namespace dhw
