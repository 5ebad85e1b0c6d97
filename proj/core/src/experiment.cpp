#include "dhw/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

namespace {

double hours_since_midnight(Timestamp t) {
  const auto since = t - floor_to(t, kDay);
  return static_cast<double>(since.count()) / 3600.0;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void HouseProfile::check_coverage(Timestamp from, Timestamp to) const {
  for (const RegularSeries* s : {&taps, &pv, &sh, &noncontrollable}) {
    if (!s->covers(from, to)) {
      throw Error(ErrorCode::trace_coverage,
                  "house '" + name + "' traces end at " + format_timestamp(s->end()) +
                      ", before " + format_timestamp(to));
    }
  }
}

HouseProfile synth_house(const HouseArchetype& a, Timestamp history_start, int days,
                         std::uint64_t seed) {
  if (days < 1) throw Error(ErrorCode::invalid_argument, "synth_house: days must be >= 1");
  a.buffer.validate();

  HouseProfile h;
  h.name = a.name;
  h.buffer = a.buffer;
  h.feed_temperature = a.feed_temperature;
  h.pv_peak_kw = a.pv_peak_kw;
  h.history_start = history_start;

  const auto hours = static_cast<std::size_t>(days) * 24;
  const auto per_hour = static_cast<std::size_t>(kHour / h.step);
  const auto steps = hours * per_hour;

  // Hourly weather: a daily cloud regime with AR(1) hourly wander, and a
  // diurnal temperature cycle with day-to-day offsets.
  Rng wx(derive_seed(seed, {1}));
  h.weather.columns = {"cloud_cover", "temperature"};
  h.weather_forecast.columns = h.weather.columns;
  std::vector<double> cloud(hours), temperature(hours);
  double daily_cloud = 0.0, daily_temp = 0.0, c = a.cloudiness;
  for (std::size_t k = 0; k < hours; ++k) {
    if (k % 24 == 0) {
      daily_cloud = a.cloudiness > 0.0 ? clamp01(a.cloudiness + 0.35 * wx.normal()) : 0.0;
      daily_temp = 2.0 * wx.normal();
    }
    const double hod = static_cast<double>(k % 24);
    if (a.cloudiness > 0.0) {
      c = clamp01(0.7 * c + 0.3 * daily_cloud + 0.1 * wx.normal());
    } else {
      c = 0.0;
    }
    cloud[k] = c;
    temperature[k] = 13.0 + daily_temp +
                     5.0 * std::sin(2.0 * std::numbers::pi * (hod - 9.0) / 24.0) +
                     0.3 * wx.normal();
  }
  for (std::size_t k = 0; k < hours; ++k) {
    const Timestamp t = history_start + kHour * static_cast<long>(k);
    h.weather.times.push_back(t);
    h.weather.rows.push_back({cloud[k], temperature[k]});
    const double fc = a.cloudiness > 0.0 ? clamp01(cloud[k] + 0.12 * wx.normal()) : 0.0;
    h.weather_forecast.times.push_back(t);
    h.weather_forecast.rows.push_back({fc, temperature[k] + wx.normal()});
  }

  auto make = [&](std::size_t n) {
    RegularSeries s;
    s.start = history_start;
    s.step = h.step;
    s.values.assign(n, 0.0);
    return s;
  };
  h.pv = make(steps);
  h.sh = make(steps);
  h.noncontrollable = make(steps);
  h.taps = make(steps);

  Rng nc(derive_seed(seed, {3}));
  const double day_len = a.sunset_hour - a.sunrise_hour;
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t k = i / per_hour;
    const Timestamp mid = h.pv.time_at(i) + h.step / 2;
    const double hod = hours_since_midnight(mid);
    double clear = 0.0;
    if (hod > a.sunrise_hour && hod < a.sunset_hour) {
      clear = a.pv_peak_kw * std::sin(std::numbers::pi * (hod - a.sunrise_hour) / day_len);
    }
    h.pv.values[i] = std::max(0.0, clear * (1.0 - 0.7 * cloud[k]));
    h.sh.values[i] = a.sh_kw_per_kelvin * std::max(0.0, 16.0 - temperature[k]);
    const double bumps = std::exp(-std::pow((hod - 7.5) / 1.0, 2)) +
                         std::exp(-std::pow((hod - 19.0) / 1.5, 2));
    h.noncontrollable.values[i] =
        std::max(0.0, a.noncontrollable_base_kw + a.noncontrollable_peak_kw * bumps +
                          0.05 * nc.normal());
  }

  Rng taps(derive_seed(seed, {2}));
  const double step_hours = to_hours(h.step);
  for (int d = 0; d < days; ++d) {
    const Timestamp midnight = history_start + kDay * d;
    const bool weekend = time_feature(midnight).day_type == DayType::weekend;
    for (const auto& cl : a.weekday_taps) {
      const int n = taps.poisson(cl.draws_per_day);
      for (int j = 0; j < n; ++j) {
        const double hour = cl.hour + (weekend ? a.weekend_shift_hours : 0.0) +
                            cl.spread_hours * taps.normal();
        const double liters = std::max(0.0, taps.normal(cl.liters_mean, cl.liters_sd));
        const double clipped = std::clamp(hour, 0.0, 24.0 - 1e-9);
        const auto i = static_cast<std::size_t>(d) * 24 * per_hour +
                       static_cast<std::size_t>(clipped / step_hours);
        h.taps.values[i] += liters;
      }
    }
  }
  return h;
}

std::vector<HouseArchetype> default_archetypes() {
  std::vector<HouseArchetype> out(6);
  const double peaks[6] = {4.0, 3.5, 5.0, 4.5, 3.0, 5.5};
  const double cloud[6] = {0.35, 0.30, 0.40, 0.35, 0.30, 0.45};
  const double morning[6] = {25.0, 20.0, 30.0, 22.0, 18.0, 28.0};
  const double evening[6] = {20.0, 18.0, 22.0, 25.0, 15.0, 20.0};
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& a = out[i];
    a.name = "house" + std::to_string(i + 1);
    a.pv_peak_kw = peaks[i];
    a.cloudiness = cloud[i];
    a.weekday_taps = {{6.5 + 0.25 * static_cast<double>(i % 3), 0.5, 2.0, morning[i], 6.0},
                      {19.5 + 0.5 * static_cast<double>(i % 2), 1.0, 2.5, evening[i], 6.0}};
    a.sh_kw_per_kelvin = 0.1 + 0.02 * static_cast<double>(i);
  }
  return out;
}

// Experiment -----------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (weeks < 2) throw Error(ErrorCode::validation, "experiment.weeks must be >= 2");
  if (warmup_weeks < 0) throw Error(ErrorCode::validation, "experiment.warmup_weeks must be >= 0");
  if (threads < 1) throw Error(ErrorCode::validation, "threads must be >= 1");
  controller.validate();
  fqi.validate();
  forecaster.validate();
  if (fqi.step != controller.refit_period) {
    throw Error(ErrorCode::validation, "fqi.step must equal controller.refit_period");
  }
  if (tap_window <= Seconds{0} || loss_window <= Seconds{0}) {
    throw Error(ErrorCode::validation, "model windows must be positive");
  }
}

Scenario ExperimentConfig::scenario_at(Timestamp t) const {
  if (t < measured_start()) return Scenario::thermostat;
  const auto week = (t - measured_start()) / kWeek;
  const Scenario other =
      first_scenario == Scenario::active ? Scenario::thermostat : Scenario::active;
  return week % 2 == 0 ? first_scenario : other;
}


HouseRun simulate_house(const HouseProfile& house, int house_index, const ExperimentConfig& config,
                        std::uint64_t seed) {
  config.validate();
  const Seconds step = config.controller.act_period;
  if (house.step != step) {
    throw Error(ErrorCode::validation, "house trace step must equal controller.act_period");
  }
  if (config.start < house.history_start) {
    throw Error(ErrorCode::trace_coverage, "experiment starts before the house traces");
  }
  house.check_coverage(config.start, config.end());
  const BufferParams& params = house.buffer;
  config.thermostat.validate(params);
  const double t_in = house.feed_temperature;
  const LossModel truth = physical_loss_model(params, t_in);
  const double dt_h = to_hours(step);

  // Metered tap history: one record per step, zero when nothing was drawn.
  std::vector<TapRecord> metered(house.taps.size());
  for (std::size_t i = 0; i < metered.size(); ++i) {
    metered[i] = {house.taps.time_at(i), house.taps.values[i]};
  }
  const RegularSeries pv_hourly = resample_mean(house.pv, kHour);
  const RecordedWeatherProvider weather(house.weather, house.weather_forecast);

  ActiveSettings settings;
  settings.controller = config.controller;
  settings.fqi = config.fqi;
  settings.fqi.seed = derive_seed(seed, {0});
  settings.tap_window = config.tap_window;
  settings.params = params;
  settings.fallback = config.thermostat;
  ActiveController controller(settings);
  bool forecaster_trained = false;

  std::vector<LossObservation> losses;
  std::vector<Timestamp> loss_times;
  std::size_t loss_first = 0;
  double hour_soc = 0.0, hour_rate = 0.0;
  int hour_count = 0;
  Timestamp hour_start = floor_to(config.start, kHour);

  HouseRun run;
  BufferState state;
  state.t_hot = params.t_max;
  state.t_in = t_in;

  std::optional<Timestamp> below_since;
  Seconds recovery{0};
  std::optional<Timestamp> unserved_since;
  const double rate_kj_s = params.cop * params.hp_electrical_power;
  const double span_kj = energy_max(params) - energy_min(params, t_in);
  const double soc_u1 = soc_charge_min(params, t_in);

  const Timestamp measured = config.measured_start();
  bool map_taken = false;
  for (Timestamp t = config.start; t < config.end(); t += step) {
    const std::size_t i = house.taps.index_of(t);
    const Scenario scenario = config.scenario_at(t);
    const double soc_before = soc(state, params);

    if (t >= measured && !forecaster_trained) {
      forecaster_trained = true;
      try {
        ForecasterParams fp = config.forecaster;
        fp.trees.seed = derive_seed(seed, {1});
        const auto n = static_cast<std::size_t>((measured - house.history_start) / kHour);
        const RegularSeries history = pv_hourly.slice(house.history_start, n);
        controller.set_forecaster(train_forecaster(
            history, house.weather.between(house.history_start, measured), fp));
      } catch (const Error&) {
        // No forecaster: the controller stays in its thermostat fallback.
      }
    }

    std::optional<Command> command;
    if (scenario == Scenario::thermostat) {
      if (!state.charging) {
        command = thermostat_tick(t, state, config.thermostat, params);
        if (!command) command = Command{};
      }
    } else {
      while (loss_first < loss_times.size() && loss_times[loss_first] < t - config.loss_window) {
        ++loss_first;
      }
      ControllerData data;
      data.tap_history = std::span<const TapRecord>(metered.data(), i);
      data.loss_history = std::span<const LossObservation>(losses).subspan(loss_first);
      data.pv_history = &pv_hourly;
      data.weather = &weather;
      data.feed_temperature = t_in;
      const int before = controller.policy_id();
      const TickOutcome out = controller.tick(t, state, data);
      command = out.command;
      if (out.refitted) ++run.refits;
      if (controller.policy_id() != before && !map_taken && t >= measured &&
          t == floor_to(t, kDay)) {
        map_taken = true;
        const Policy& p = *controller.policy();
        for (int n = 1; n <= p.horizon(); ++n) {
          for (int k = 0; k <= 20; ++k) {
            const double x = static_cast<double>(k) / 20.0;
            run.policy_map.push_back({house_index, t, n, x, p.greedy_action(n, x)});
          }
        }
      }
    }

    const double tap = house.taps.values[i];
    const StepResult r = transition_to_target(state, command ? command->target_soc : std::nullopt,
                                              tap, house.pv, t, step, params, truth);
    const double soc_after = soc(r.state, params);

    // Comfort bookkeeping.
    if (t >= measured) {
      if (tap > 0.0) {
        ++run.comfort.tap_events;
        if (below_since && t - *below_since > recovery) ++run.comfort.late_tap_events;
      }
      const bool idle_at_zero = soc_after <= 0.0 && !r.state.charging && !r.charge_completed;
      if (idle_at_zero) {
        if (!unserved_since) unserved_since = t + step;
      } else if (unserved_since) {
        run.comfort.max_buc_latency = std::max(run.comfort.max_buc_latency, t - *unserved_since);
        unserved_since.reset();
      }
    }
    if (soc_after < 0.0) {
      if (!below_since) {
        below_since = t + step;
        const double seconds = std::max(0.0, soc_u1 - soc_after) * span_kj / rate_kj_s;
        recovery = Seconds{static_cast<long>(std::ceil(seconds))} + step;
      }
    } else {
      below_since.reset();
    }

    // The simulator reports its standing loss directly; observations are hourly means.
    if (floor_to(t, kHour) != hour_start) {
      if (hour_count > 0) {
        losses.push_back({hour_soc / hour_count, hour_rate / hour_count});
        loss_times.push_back(hour_start);
      }
      hour_start = floor_to(t, kHour);
      hour_soc = hour_rate = 0.0;
      hour_count = 0;
    }
    {
      BufferState tapped = state;
      tapped.v_tapped = std::min(params.volume_liters, state.v_tapped + tap);
      hour_soc += soc(tapped, params);
      hour_rate += r.standing_loss_kj / dt_h;
      ++hour_count;
    }

    if (t >= measured) {
      if (command) run.commands.push_back({t, house_index, scenario, command->action, soc_before,
                                           scenario == Scenario::active ? controller.policy_id() : 0});
      LedgerRow row;
      row.time = t;
      row.house = house_index;
      row.scenario = scenario;
      row.pv_kw = house.pv.values[i];
      row.dhw_kw = r.hp_electrical_kwh / dt_h;
      row.sh_kw = house.sh.values[i];
      row.nc_kw = house.noncontrollable.values[i];
      if (command) row.action = command->action;
      row.soc = soc_after;
      run.ledger.push_back(row);
    }
    state = r.state;
  }
  run.forecast_failures = controller.forecast_failures();
  return run;
}

ExperimentResult run_experiment(const std::vector<HouseProfile>& houses,
                                const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<HouseRun> runs(houses.size());
  std::vector<std::exception_ptr> errors(houses.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t h = next++; h < houses.size(); h = next++) {
      try {
        runs[h] = simulate_house(houses[h], static_cast<int>(h), config,
                                 derive_seed(seed, {static_cast<std::uint64_t>(h)}));
      } catch (...) {
        errors[h] = std::current_exception();
      }
    }
  };
  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), houses.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult out;
  out.ledger.step = config.controller.act_period;
  for (auto& r : runs) {
    out.ledger.rows.insert(out.ledger.rows.end(), r.ledger.begin(), r.ledger.end());
    out.commands.insert(out.commands.end(), r.commands.begin(), r.commands.end());
    out.policy_map.insert(out.policy_map.end(), r.policy_map.begin(), r.policy_map.end());
    out.comfort.tap_events += r.comfort.tap_events;
    out.comfort.late_tap_events += r.comfort.late_tap_events;
    out.comfort.max_buc_latency = std::max(out.comfort.max_buc_latency, r.comfort.max_buc_latency);
  }
  return out;
}

// Indicators -----------------------------------------------------------------

KpiReport compute_kpis(const ExperimentLedger& ledger) {
  if (ledger.rows.empty()) throw Error(ErrorCode::empty_ledger, "no ledger rows");
  struct Acc {
    double pv = 0, dhw = 0, sh = 0, dhw_cap = 0, sh_cap = 0, total_cap = 0;
    long steps = 0;
  } acc[2];
  const double dt_h = to_hours(ledger.step);
  for (const auto& r : ledger.rows) {
    auto& a = acc[r.scenario == Scenario::active ? 1 : 0];
    const double total = r.dhw_kw + r.sh_kw + r.nc_kw;
    a.pv += r.pv_kw * dt_h;
    a.dhw += r.dhw_kw * dt_h;
    a.sh += r.sh_kw * dt_h;
    a.dhw_cap += std::min(r.pv_kw, r.dhw_kw) * dt_h;
    a.sh_cap += std::min(r.pv_kw, r.sh_kw) * dt_h;
    a.total_cap += std::min(r.pv_kw, total) * dt_h;
    ++a.steps;
  }
  auto pct = [](double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; };
  auto fill = [&](const Acc& a, Scenario s) {
    ScenarioKpis k;
    k.scenario = s;
    k.days = static_cast<double>(a.steps) * dt_h / 24.0;
    k.pv_captured_by_dhw = pct(a.dhw_cap, a.pv);
    k.pv_captured_by_total = pct(a.total_cap, a.pv);
    k.pv_captured_by_sh = pct(a.sh_cap, a.pv);
    if (k.days > 0.0) {
      k.el_consumption_per_day = a.dhw / k.days;
      k.pv_production_per_day = a.pv / k.days;
      k.sh_consumption_per_day = a.sh / k.days;
    }
    return k;
  };
  return {fill(acc[0], Scenario::thermostat), fill(acc[1], Scenario::active)};
}

std::vector<HourlyProfileRow> hourly_profiles(const ExperimentLedger& ledger) {
  std::vector<HourlyProfileRow> rows(48);
  std::vector<long> counts(48, 0);
  for (int s = 0; s < 2; ++s) {
    for (int h = 0; h < 24; ++h) {
      rows[static_cast<std::size_t>(s * 24 + h)].scenario =
          s == 0 ? Scenario::thermostat : Scenario::active;
      rows[static_cast<std::size_t>(s * 24 + h)].hour = h;
    }
  }
  for (const auto& r : ledger.rows) {
    const auto k = static_cast<std::size_t>((r.scenario == Scenario::active ? 24 : 0) +
                                            hour_of_day(r.time));
    rows[k].pv_kw += r.pv_kw;
    rows[k].dhw_kw += r.dhw_kw;
    rows[k].sh_kw += r.sh_kw;
    rows[k].total_kw += r.dhw_kw + r.sh_kw + r.nc_kw;
    ++counts[k];
  }
  std::vector<HourlyProfileRow> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (counts[k] == 0) continue;
    const auto n = static_cast<double>(counts[k]);
    rows[k].pv_kw /= n;
    rows[k].dhw_kw /= n;
    rows[k].sh_kw /= n;
    rows[k].total_kw /= n;
    out.push_back(rows[k]);
  }
  return out;
}

}  // namespace dhw
