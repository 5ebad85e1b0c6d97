#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dhw/loss_model.hpp"
#include "dhw/series.hpp"
#include "dhw/time.hpp"

namespace dhw {

/// Which 2-layer energy formula to use. `additive` counts the cold layer's
/// energy; `literal_minus` subtracts it, kept only for comparison runs.
enum class EnergyForm { additive, literal_minus };

struct BufferParams {
  double volume_liters = 200.0;
  double t_min = 45.0;  // °C
  double t_max = 55.0;  // °C
  double c_p = 4.186;   // kJ/(kg·K)
  double water_density = 1.0;       // kg/L
  double hp_electrical_power = 2.0;  // kW
  double cop = 3.0;
  double loss_coefficient = 0.004;  // 1/h, fraction of content above ambient
  double ambient_temperature = 20.0;
  EnergyForm energy_form = EnergyForm::additive;

  /// Throws validation on any violated invariant.
  void validate() const;

  /// kJ per kelvin per liter.
  double specific_heat() const { return c_p * water_density; }
};

struct BufferState {
  double t_hot = 55.0;      // °C, hot layer (mid-buffer sensor while the front is low)
  double t_in = 10.0;       // °C, feed water
  double v_tapped = 0.0;    // liters drawn since the last complete recharge
  std::optional<double> charging;  // target SoC of a cycle in progress

  friend bool operator==(const BufferState&, const BufferState&) = default;
};

enum class Action : int { delay = 0, charge_min = 1, charge_full = 2 };

inline constexpr std::array<Action, 3> kActions{Action::delay, Action::charge_min,
                                                Action::charge_full};

inline int to_int(Action u) { return static_cast<int>(u); }
Action action_from_int(int value);
std::string_view to_string(Action u);

struct ProfileSegment {
  double duration_minutes = 0.0;
  double electrical_power = 0.0;  // kW
};

/// Heat-pump electrical power over time. The pump cannot modulate, so every
/// nonempty segment runs at the rated power.
struct PowerProfile {
  std::vector<ProfileSegment> segments;

  double duration_minutes() const;
  double electrical_energy_kwh() const;
};

/// A profile anchored at an absolute start time.
struct PositionedProfile {
  Timestamp start{};
  PowerProfile profile;
};

// 2-layer energy model ------------------------------------------------------

/// kJ, relative to 0 °C.
double energy_content(const BufferState& state, const BufferParams& params);
/// Uniformly charged at t_max.
double energy_max(const BufferParams& params);
/// Half at feed temperature, half at t_min.
double energy_min(const BufferParams& params, double t_in);

double soc(const BufferState& state, const BufferParams& params);
/// SoC of a buffer with uniform temperature `temperature`.
double soc_of_uniform(double temperature, const BufferParams& params, double t_in);
/// Target SoC of action 1 (uniform t_min).
double soc_charge_min(const BufferParams& params, double t_in);
/// SoC of a fully tapped buffer (lowest reachable).
double soc_floor(const BufferParams& params, double t_in);
/// Temperature of a uniform buffer at `target_soc`.
double uniform_temperature(double target_soc, const BufferParams& params, double t_in);

/// Mid-buffer sensor: reads the hot layer until the cold front passes half height.
double sensor_temperature(const BufferState& state, const BufferParams& params);

/// Physical standing loss k·(E − E_ambient) expressed over SoC, used as the
/// simulator's ground truth.
LossModel physical_loss_model(const BufferParams& params, double t_in);

// Actions and heat pump -----------------------------------------------------

/// None for delay, and none when the buffer already sits at or above the
/// action's target.
std::optional<double> action_target_soc(Action u, const BufferState& state,
                                        const BufferParams& params);

/// Single constant-power segment filling the SoC deficit; throws invalid_target
/// unless target_soc > current_soc.
PowerProfile power_profile(double current_soc, double target_soc, const BufferParams& params,
                           double t_in);

/// Starts a recharge toward uniform t_min when SoC ≤ 0 and nothing is charging.
BufferState apply_backup_controller(const BufferState& state, const BufferParams& params);

// Cost ----------------------------------------------------------------------

struct PvSplit {
  double injected_kwh = 0.0;  // ∫ max(0, PV − HP)
  double captured_kwh = 0.0;  // ∫ min(PV, HP)
};

/// Integrates PV against the heat-pump trace over [from, to) at the native
/// resolution of both; throws misaligned_forecast if PV does not cover it.
PvSplit split_pv(const PositionedProfile& hp, const ForecastSeries& pv, Timestamp from,
                 Timestamp to);

/// Energy injected into the grid over [t, t + dt) (kWh). Non-controllable
/// loads do not enter the cost.
double cost_of_step(const PositionedProfile& hp, const ForecastSeries& pv, Timestamp t,
                    Seconds dt);

// Transition ----------------------------------------------------------------

struct StepResult {
  BufferState state;
  double hp_electrical_kwh = 0.0;
  double cost_kwh = 0.0;
  double tap_energy_kj = 0.0;
  double standing_loss_kj = 0.0;
  double tapped_liters = 0.0;  // after clamping to the free volume
  bool charge_completed = false;
  PositionedProfile hp_trace;
};

/// One simulator step of length dt starting at t: tap draw, standing loss,
/// backup controller, charging (capped at the pump's rating and carried over
/// until the cycle completes), then cost.
StepResult transition(const BufferState& state, Action u, double tap_liters,
                      const ForecastSeries& pv, Timestamp t, Seconds dt,
                      const BufferParams& params, const LossModel& loss);

/// Same as transition() but with an explicit requested target SoC instead of
/// an action (used by the thermostat baseline, whose setpoint may differ from
/// t_min). std::nullopt requests nothing.
StepResult transition_to_target(const BufferState& state, std::optional<double> requested_target,
                                double tap_liters, const ForecastSeries& pv, Timestamp t,
                                Seconds dt, const BufferParams& params, const LossModel& loss);

/// Minimum mid-buffer reading over the 30 days up to the latest reading.
double estimate_feed_temperature(std::span<const TimedValue> history);

}  // namespace dhw
