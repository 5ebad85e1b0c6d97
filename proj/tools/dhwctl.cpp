// dhwctl: run DHW demand-response experiments, train PV forecasters and fit
// single policies from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dhw/error.hpp"
#include "dhw/io.hpp"
#include "dhw/loss_model.hpp"

namespace fs = std::filesystem;
using namespace dhw;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::schema_violation:
    case ErrorCode::file_not_found:
    case ErrorCode::trace_coverage:
    case ErrorCode::misaligned_series:
      return kUsageError;
    default:
      return kRuntimeError;
  }
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

/// PV samples on their own grid, then averaged to `step`.
RegularSeries pv_at(const std::vector<TimedValue>& samples, Seconds step) {
  if (samples.size() < 2) throw Error(ErrorCode::schema_violation, "PV file needs two or more rows");
  Seconds native = samples[1].time - samples[0].time;
  for (std::size_t i = 2; i < samples.size(); ++i) {
    native = std::min(native, samples[i].time - samples[i - 1].time);
  }
  const RegularSeries regular = regularize(samples, native);
  return native == step ? regular : resample_mean(regular, step);
}

// simulate ----------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  int weeks = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  int threads = 1;
  std::string phase;
};

std::vector<HouseProfile> houses_for(RunConfig& config) {
  if (!config.tap_csv) return synth_houses(config);

  std::vector<LoadRecord> loads;
  if (config.loads_csv) loads = read_loads_csv(*config.loads_csv);
  HouseProfile house = house_from_data("house1", config.buffer, config.feed_temperature,
                                       read_tap_csv(*config.tap_csv), read_pv_csv(*config.pv_csv),
                                       loads, read_weather_csv(*config.weather_csv),
                                       config.controller.act_period);
  // The measured run starts after the pre-history, at the first midnight.
  config.start = floor_to(house.history_start + kDay * config.prehistory_days + kDay - Seconds{1},
                          kDay);
  return {std::move(house)};
}

int run_simulate(const SimulateArgs& args) {
  RunConfig config = load_config(args.config);
  if (args.weeks != 0) config.weeks = args.weeks;
  if (args.seed_given) config.seed = args.seed;
  if (!args.out.empty()) config.out_dir = args.out;
  if (!args.phase.empty()) config.first_scenario = scenario_from_string(args.phase);
  if (args.threads < 1) throw Error(ErrorCode::validation, "--threads must be >= 1");
  config.validate();

  const auto houses = houses_for(config);
  ExperimentConfig experiment = config.experiment();
  experiment.threads = args.threads;
  const ExperimentResult result = run_experiment(houses, experiment, config.seed);
  const KpiReport kpis = compute_kpis(result.ledger);

  fs::create_directories(config.out_dir);
  write_ledger_csv(config.out_dir / "ledger.csv", result.ledger);
  write_kpis_csv(config.out_dir / "kpis.csv", kpis);
  write_commands_csv(config.out_dir / "commands.csv", result.commands);
  write_policy_map_csv(config.out_dir / "policy_map.csv", result.policy_map);
  write_hourly_profiles_csv(config.out_dir / "hourly_profiles.csv", hourly_profiles(result.ledger));

  std::cout << std::fixed << std::setprecision(2);
  std::cout << houses.size() << " houses, " << config.weeks << " weeks, seed " << config.seed
            << "\n";
  for (const ScenarioKpis* k : {&kpis.thermostat, &kpis.active}) {
    std::cout << std::left << std::setw(11) << to_string(k->scenario) << std::right
              << " pv->dhw " << std::setw(6) << k->pv_captured_by_dhw << "%  pv->total "
              << std::setw(6) << k->pv_captured_by_total << "%  dhw el " << std::setw(5)
              << k->el_consumption_per_day << " kWh/day\n";
  }
  std::cout << "late taps " << result.comfort.late_tap_events << " of "
            << result.comfort.tap_events << "\n";
  std::cout << "wrote " << config.out_dir.string() << "\n";
  return 0;
}

// synth -------------------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out;
  int house = 0;
  int days = 42;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& args) {
  RunConfig config = config_or_default(args.config);
  config.seed = args.seed;
  const auto archetypes = default_archetypes();
  if (args.house < 0 || args.house >= static_cast<int>(archetypes.size())) {
    throw Error(ErrorCode::validation,
                "--house must lie in [0, " + std::to_string(archetypes.size() - 1) + "]");
  }
  if (args.days < 2) throw Error(ErrorCode::validation, "--days must be >= 2");
  HouseArchetype a = archetypes[static_cast<std::size_t>(args.house)];
  a.buffer = config.buffer;
  a.feed_temperature = config.feed_temperature;
  const Timestamp from = config.start - kDay * config.prehistory_days;
  const HouseProfile h = synth_house(a, from, args.days, args.seed);

  std::vector<TapRecord> taps;
  for (std::size_t i = 0; i < h.taps.size(); ++i) {
    if (h.taps.values[i] > 0.0) taps.push_back({h.taps.time_at(i), h.taps.values[i]});
  }
  const fs::path out(args.out);
  fs::create_directories(out);
  write_tap_csv(out / "tap.csv", taps);
  write_pv_csv(out / "pv.csv", h.pv);
  write_weather_csv(out / "weather.csv", h.weather);
  write_loads_csv(out / "loads.csv", h.sh, h.noncontrollable);
  std::cout << "wrote " << args.days << " days of " << h.name << " to " << out.string() << "\n";
  return 0;
}

// train-forecaster ----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string pv;
  std::string weather;
  std::string out;
  int holdout_days = 7;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& args) {
  const RunConfig config = config_or_default(args.config);
  ForecasterParams params = config.forecaster;
  params.trees.seed = args.seed;
  if (args.holdout_days < 1) throw Error(ErrorCode::validation, "--holdout-days must be >= 1");

  const RegularSeries power = pv_at(read_pv_csv(args.pv), kHour);
  const WeatherFeatures weather = read_weather_csv(args.weather);
  const HoldoutScore score = score_holdout(power, weather, params, kDay * args.holdout_days);

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "holdout forecasts " << score.forecasts << "\n";
  std::cout << "mae_model_kw " << score.model_mae << "\n";
  std::cout << "mae_persistence_kw " << score.persistence_mae << "\n";
  std::cout << (score.model_mae < score.persistence_mae ? "model beats persistence\n"
                                                        : "model does NOT beat persistence\n");
  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw Error(ErrorCode::file_not_found, "cannot write " + args.out);
    out << forecast_model_to_json(score.model) << "\n";
  }
  return 0;
}

// fit-policy ----------------------------------------------------------------------

struct FitArgs {
  std::string config;
  std::string forecast;
  std::string taps;
  std::string start;
  std::string out;
  std::optional<double> soc;
  int soc_points = 21;
  std::uint64_t seed = 0;
};

int run_fit(const FitArgs& args) {
  const RunConfig config = config_or_default(args.config);
  FqiConfig fqi = config.fqi;
  fqi.seed = args.seed;
  fqi.horizon_steps = config.controller.horizon_steps();
  if (args.soc_points < 2) throw Error(ErrorCode::validation, "--soc-points must be >= 2");
  if (args.soc && !(*args.soc >= 0.0 && *args.soc <= 1.0)) {
    throw Error(ErrorCode::validation, "--soc must lie in [0, 1]");
  }

  const RegularSeries pv = pv_at(read_pv_csv(args.forecast), fqi.step);
  const Timestamp start = args.start.empty() ? pv.start : parse_timestamp(args.start);
  const auto taps = metered_draws(read_tap_csv(args.taps), fqi.step);
  const TapModel tap_model = fit_tap_model(taps, kDay * config.tap_window_days, fqi.step);
  const double t_in = config.feed_temperature;
  const Policy policy = fit_policy(fqi, start, tap_model, physical_loss_model(config.buffer, t_in),
                                   pv, config.buffer, t_in);

  std::vector<double> points;
  for (int i = 0; i < args.soc_points; ++i) {
    points.push_back(static_cast<double>(i) / static_cast<double>(args.soc_points - 1));
  }
  const auto rows = q_surface(policy, points);
  if (!args.out.empty()) {
    write_qsurface_csv(args.out, rows);
    std::cout << "wrote " << rows.size() << " rows to " << args.out << "\n";
  }
  if (args.soc) {
    const Action u = policy.greedy_action(1, *args.soc);
    std::cout << "first action at soc " << format_number(*args.soc) << ": " << to_int(u) << " ("
              << to_string(u) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhwctl: domestic hot water demand response with fitted Q-iteration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dhwctl 0.1.0");
  app.failure_message(CLI::FailureMessage::help);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run the thermostat/active A/B experiment");
  simulate->add_option("--config", sim.config, "config file (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--weeks", sim.weeks, "measured weeks (overrides experiment.weeks)");
  simulate->add_option("--seed", sim.seed, "seed for all randomness (overrides seed)");
  simulate->add_option("--out", sim.out, "output directory (overrides out_dir)");
  simulate->add_option("--threads", sim.threads, "houses simulated in parallel")
      ->default_val(1);
  simulate->add_option("--phase", sim.phase, "scenario of the first measured week")
      ->check(CLI::IsMember({"thermostat", "active"}));

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "write synthetic tap/pv/weather/loads CSVs");
  synth->add_option("--config", syn.config, "config file")->check(CLI::ExistingFile);
  synth->add_option("--out", syn.out, "output directory")->required();
  synth->add_option("--house", syn.house, "archetype index")->default_val(0);
  synth->add_option("--days", syn.days, "days of data")->default_val(42);
  synth->add_option("--seed", syn.seed, "seed")->default_val(0);

  TrainArgs tr;
  auto* train = app.add_subcommand("train-forecaster", "train a PV forecaster and score it");
  train->add_option("--config", tr.config, "config file")->check(CLI::ExistingFile);
  train->add_option("--pv", tr.pv, "PV CSV (timestamp,power_kw)")->required();
  train->add_option("--weather", tr.weather, "weather CSV (timestamp,<features>)")->required();
  train->add_option("--out", tr.out, "write the model as JSON here");
  train->add_option("--holdout-days", tr.holdout_days, "days held out for scoring")
      ->default_val(7);
  train->add_option("--seed", tr.seed, "seed")->default_val(0);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit-policy", "fit one policy and write its Q surface");
  fit->add_option("--config", fa.config, "config file")->check(CLI::ExistingFile);
  fit->add_option("--forecast", fa.forecast, "PV forecast CSV (timestamp,power_kw)")->required();
  fit->add_option("--taps", fa.taps, "tap history CSV (timestamp,liters)")->required();
  fit->add_option("--start", fa.start, "horizon start (default: first forecast row)");
  fit->add_option("--out", fa.out, "Q-surface CSV path");
  fit->add_option("--soc", fa.soc, "print the first greedy action at this SoC");
  fit->add_option("--soc-points", fa.soc_points, "SoC points per stage in the surface")
      ->default_val(21);
  fit->add_option("--seed", fa.seed, "seed")->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (simulate->parsed()) {
      sim.seed_given = simulate->count("--seed") > 0;
      return run_simulate(sim);
    }
    if (synth->parsed()) return run_synth(syn);
    if (train->parsed()) return run_train(tr);
    if (fit->parsed()) return run_fit(fa);
  } catch (const Error& e) {
    std::cerr << "dhwctl: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "dhwctl: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
