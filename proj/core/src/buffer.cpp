#include "dhw/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhw/error.hpp"

namespace dhw {

namespace {


void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::validation, what);
}

double seconds_of(Seconds s) { return static_cast<double>(s.count()); }

}  // namespace

void BufferParams::validate() const {
  require(t_min > 0.0 && t_min < t_max, "buffer: need 0 < t_min < t_max");
  require(volume_liters > 0.0, "buffer: volume_liters must be positive");
  require(c_p > 0.0, "buffer: c_p must be positive");
  require(water_density > 0.0, "buffer: water_density must be positive");
  require(hp_electrical_power > 0.0, "buffer: hp_electrical_power must be positive");
  require(cop >= 1.0, "buffer: cop must be at least 1");
  require(loss_coefficient >= 0.0, "buffer: loss_coefficient must be non-negative");
}

Action action_from_int(int value) {
  if (value < 0 || value > 2) {
    throw Error(ErrorCode::validation, "action must be 0, 1 or 2, got " + std::to_string(value));
  }
  return static_cast<Action>(value);
}

std::string_view to_string(Action u) {
  switch (u) {
    case Action::delay: return "delay";
    case Action::charge_min: return "charge-min";
    case Action::charge_full: return "charge-full";
  }
  return "?";
}

double PowerProfile::duration_minutes() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration_minutes;
  return total;
}

double PowerProfile::electrical_energy_kwh() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration_minutes / 60.0 * s.electrical_power;
  return total;
}

double energy_content(const BufferState& state, const BufferParams& params) {
  const double hot = state.t_hot * (params.volume_liters - state.v_tapped);
  const double cold = state.t_in * state.v_tapped;
  const double sum = params.energy_form == EnergyForm::additive ? hot + cold : hot - cold;
  return params.specific_heat() * sum;
}

double energy_max(const BufferParams& params) {
  return params.specific_heat() * params.t_max * params.volume_liters;
}

double energy_min(const BufferParams& params, double t_in) {
  const double half = params.volume_liters / 2.0;
  return params.specific_heat() * (t_in * half + params.t_min * half);
}

namespace {

double energy_span(const BufferParams& params, double t_in) {
  const double span = energy_max(params) - energy_min(params, t_in);
  if (!(span > 0.0)) {
    throw Error(ErrorCode::degenerate_parameters,
                "E_max <= E_min (feed temperature " + std::to_string(t_in) + " °C)");
  }
  return span;
}

}  // namespace

double soc(const BufferState& state, const BufferParams& params) {
  const double span = energy_span(params, state.t_in);
  return (energy_content(state, params) - energy_min(params, state.t_in)) / span;
}

double soc_of_uniform(double temperature, const BufferParams& params, double t_in) {
  const double e = params.specific_heat() * temperature * params.volume_liters;
  return (e - energy_min(params, t_in)) / energy_span(params, t_in);
}

double soc_charge_min(const BufferParams& params, double t_in) {
  return soc_of_uniform(params.t_min, params, t_in);
}

double soc_floor(const BufferParams& params, double t_in) {
  const BufferState tapped{params.t_max, t_in, params.volume_liters, std::nullopt};
  return soc(tapped, params);
}

double uniform_temperature(double target_soc, const BufferParams& params, double t_in) {
  const double e = energy_min(params, t_in) + target_soc * energy_span(params, t_in);
  return e / (params.specific_heat() * params.volume_liters);
}

double sensor_temperature(const BufferState& state, const BufferParams& params) {
  return state.v_tapped < params.volume_liters / 2.0 ? state.t_hot : state.t_in;
}

LossModel physical_loss_model(const BufferParams& params, double t_in) {
  const double e_amb = params.specific_heat() * params.ambient_temperature * params.volume_liters;
  const double e_lo = energy_min(params, t_in);
  const double span = energy_span(params, t_in);
  LossModel::KnotValues values{};
  for (std::size_t k = 0; k < LossModel::kKnots; ++k) {
    const double e = e_lo + LossModel::knot_position(k) * span;
    values[k] = std::max(0.0, params.loss_coefficient * (e - e_amb));
  }
  return LossModel(values);
}

std::optional<double> action_target_soc(Action u, const BufferState& state,
                                        const BufferParams& params) {
  double target = 0.0;
  switch (u) {
    case Action::delay: return std::nullopt;
    case Action::charge_min: target = soc_charge_min(params, state.t_in); break;
    case Action::charge_full: target = 1.0; break;
  }
  if (soc(state, params) >= target) return std::nullopt;
  return target;
}

PowerProfile power_profile(double current_soc, double target_soc, const BufferParams& params,
                           double t_in) {
  if (!(target_soc > current_soc)) {
    throw Error(ErrorCode::invalid_target, "target SoC " + std::to_string(target_soc) +
                                               " is not above current SoC " +
                                               std::to_string(current_soc));
  }
  const double thermal_kj = (target_soc - current_soc) * energy_span(params, t_in);
  const double seconds = thermal_kj / (params.cop * params.hp_electrical_power);
  return PowerProfile{{ProfileSegment{seconds / 60.0, params.hp_electrical_power}}};
}

BufferState apply_backup_controller(const BufferState& state, const BufferParams& params) {
  if (state.charging || soc(state, params) > 0.0) return state;
  BufferState out = state;
  out.charging = soc_charge_min(params, state.t_in);
  return out;
}

PvSplit split_pv(const PositionedProfile& hp, const ForecastSeries& pv, Timestamp from,
                 Timestamp to) {
  if (to < from) throw Error(ErrorCode::invalid_argument, "split_pv: negative interval");
  if (!pv.covers(from, to)) {
    throw Error(ErrorCode::misaligned_forecast, "PV series [" + format_timestamp(pv.start) +
                                                    ", " + format_timestamp(pv.end()) +
                                                    ") does not cover [" + format_timestamp(from) +
                                                    ", " + format_timestamp(to) + ")");
  }
  PvSplit out;
  if (to == from) return out;

  // Segment bounds in seconds relative to `from`.
  struct Span {
    double a, b, power;
  };
  std::vector<Span> on;
  double cursor = seconds_of(hp.start - from);
  for (const auto& seg : hp.profile.segments) {
    const double len = seg.duration_minutes * 60.0;
    if (len > 0.0 && seg.electrical_power > 0.0) on.push_back({cursor, cursor + len, seg.electrical_power});
    cursor += len;
  }

  const double horizon = seconds_of(to - from);
  std::size_t i = pv.index_of(from);
  for (; i < pv.size(); ++i) {
    const double pa = std::max(0.0, seconds_of(pv.time_at(i) - from));
    const double pb = std::min(horizon, seconds_of(pv.time_at(i + 1) - from));
    if (pa >= horizon) break;
    if (pb <= pa) continue;
    const double p = pv.values[i];
    double hp_time = 0.0;
    double injected = 0.0;
    double captured = 0.0;
    for (const auto& s : on) {
      const double o = std::min(pb, s.b) - std::max(pa, s.a);
      if (o <= 0.0) continue;
      hp_time += o;
      captured += std::min(p, s.power) * o;
      injected += std::max(0.0, p - s.power) * o;
    }
    injected += p * std::max(0.0, (pb - pa) - hp_time);
    out.injected_kwh += injected / 3600.0;
    out.captured_kwh += captured / 3600.0;
  }
  return out;
}

double cost_of_step(const PositionedProfile& hp, const ForecastSeries& pv, Timestamp t,
                    Seconds dt) {
  return split_pv(hp, pv, t, t + dt).injected_kwh;
}

StepResult transition(const BufferState& state, Action u, double tap_liters,
                      const ForecastSeries& pv, Timestamp t, Seconds dt,
                      const BufferParams& params, const LossModel& loss) {
  std::optional<double> requested;
  if (u == Action::charge_min) requested = soc_charge_min(params, state.t_in);
  if (u == Action::charge_full) requested = 1.0;
  return transition_to_target(state, requested, tap_liters, pv, t, dt, params, loss);
}

StepResult transition_to_target(const BufferState& state, std::optional<double> requested_target,
                                double tap_liters, const ForecastSeries& pv, Timestamp t,
                                Seconds dt, const BufferParams& params, const LossModel& loss) {
  if (dt <= Seconds{0}) throw Error(ErrorCode::invalid_argument, "transition: dt must be positive");
  if (!(tap_liters >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "transition: tap draw must be non-negative");
  }
  const double volume = params.volume_liters;
  const double heat_per_kelvin_liter = params.specific_heat();

  StepResult r;
  BufferState s = state;

  // (a) tap draw moves the cold front up.
  const double e_before_tap = energy_content(s, params);
  const double v_new = std::min(volume, s.v_tapped + tap_liters);
  r.tapped_liters = v_new - s.v_tapped;
  s.v_tapped = v_new;
  r.tap_energy_kj = e_before_tap - energy_content(s, params);

  // (b) standing loss cools the hot layer, never below feed temperature.
  const double hot_volume = volume - s.v_tapped;
  double loss_kj = loss.predict(soc(s, params)) * to_hours(dt);
  if (hot_volume > 0.0 && s.t_hot > s.t_in && loss_kj > 0.0) {
    loss_kj = std::min(loss_kj, heat_per_kelvin_liter * hot_volume * (s.t_hot - s.t_in));
    s.t_hot = std::max(s.t_in, s.t_hot - loss_kj / (heat_per_kelvin_liter * hot_volume));
  } else {
    loss_kj = 0.0;
  }
  r.standing_loss_kj = loss_kj;

  // (c) backup controller and (d) requested charge. A cycle already in
  // progress ignores new requests.
  if (!s.charging) {
    const double now = soc(s, params);
    std::optional<double> target;
    if (now <= 0.0) target = soc_charge_min(params, s.t_in);
    if (requested_target && *requested_target > now) {
      target = target ? std::max(*target, *requested_target) : *requested_target;
    }
    s.charging = target;
  }

  r.hp_trace.start = t;
  if (s.charging) {
    // Heating mixes the buffer; energy is conserved by the mix.
    const double mean = (s.t_hot * (volume - s.v_tapped) + s.t_in * s.v_tapped) / volume;
    s.t_hot = std::max(mean, s.t_in);
    s.v_tapped = 0.0;

    const double target = *s.charging;
    const double e_target =
        energy_min(params, s.t_in) + target * energy_span(params, s.t_in);
    const double deficit = e_target - energy_content(s, params);
    const double rate = params.cop * params.hp_electrical_power;  // kJ/s thermal
    const double cap = rate * seconds_of(dt);
    double on_seconds = 0.0;
    if (deficit <= cap) {
      on_seconds = std::max(0.0, deficit) / rate;
      s.t_hot = uniform_temperature(target, params, s.t_in);
      s.v_tapped = 0.0;
      s.charging.reset();
      r.charge_completed = true;
    } else {
      on_seconds = seconds_of(dt);
      s.t_hot += cap / (heat_per_kelvin_liter * volume);
    }
    r.hp_electrical_kwh = params.hp_electrical_power * on_seconds / 3600.0;
    if (on_seconds > 0.0) {
      r.hp_trace.profile.segments.push_back({on_seconds / 60.0, params.hp_electrical_power});
    }
  }

  r.cost_kwh = cost_of_step(r.hp_trace, pv, t, dt);
  r.state = s;
  return r;
}

double estimate_feed_temperature(std::span<const TimedValue> history) {
  if (history.empty()) throw Error(ErrorCode::empty_history, "no temperature readings");
  Timestamp latest = history.front().time;
  for (const auto& h : history) latest = std::max(latest, h.time);
  const Timestamp cutoff = latest - Seconds{30 * 86400};
  double lowest = history.front().value;
  bool any = false;
  for (const auto& h : history) {
    if (h.time < cutoff) continue;
    lowest = any ? std::min(lowest, h.value) : h.value;
    any = true;
  }
  return lowest;
}

}  // namespace dhw
