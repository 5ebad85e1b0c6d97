#include "dhw/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

class CsvReader {
 public:
  explicit CsvReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw Error(ErrorCode::file_not_found, "cannot open " + path.string());
    std::string line;
    if (!next_line(line)) fail("missing header row");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    header_ = split(line);
  }

  const std::vector<std::string>& header() const { return header_; }

  void expect_header(const std::vector<std::string>& names) const {
    if (header_ != names) {
      std::string want;
      for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
      fail_at(1, "expected header '" + want + "'");
    }
  }

  /// False at end of file. Blank lines are skipped.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (next_line(line)) {
      if (trim(line).empty()) continue;
      fields = split(line);
      if (fields.size() != header_.size()) {
        fail("expected " + std::to_string(header_.size()) + " fields, got " +
             std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(line_, what); }

  [[noreturn]] void fail_at(std::size_t line, const std::string& what) const {
    throw Error(ErrorCode::schema_violation,
                path_.filename().string() + " line " + std::to_string(line) + ": " + what);
  }

  double number(const std::string& field, std::string_view column) const {
    double v = 0.0;
    const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || r.ec != std::errc() || r.ptr != field.data() + field.size() ||
        !std::isfinite(v)) {
      fail(std::string(column) + " '" + field + "' is not a number");
    }
    return v;
  }

  double non_negative(const std::string& field, std::string_view column) const {
    const double v = number(field, column);
    if (v < 0.0) fail(std::string(column) + " must be non-negative, got " + field);
    return v;
  }

  long integer(const std::string& field, std::string_view column) const {
    long v = 0;
    const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || r.ec != std::errc() || r.ptr != field.data() + field.size()) {
      fail(std::string(column) + " '" + field + "' is not an integer");
    }
    return v;
  }

  Timestamp time(const std::string& field) const {
    try {
      return parse_timestamp(field);
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  /// Rejects timestamps that do not increase.
  Timestamp increasing_time(const std::string& field, std::optional<Timestamp>& last) const {
    const Timestamp t = time(field);
    if (last && t <= *last) {
      fail("timestamp " + field + " does not increase (previous " + format_timestamp(*last) + ")");
    }
    last = t;
    return t;
  }

 private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  fs::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::file_not_found, "cannot write " + path.string());
  return out;
}

Action parse_action(const CsvReader& r, const std::string& field) {
  const long v = r.integer(field, "action");
  if (v < 0 || v > 2) r.fail("action must be 0, 1 or 2");
  return static_cast<Action>(v);
}

Scenario parse_scenario(const CsvReader& r, const std::string& field) {
  try {
    return scenario_from_string(field);
  } catch (const Error&) {
    r.fail("unknown scenario '" + field + "'");
  }
}

}  // namespace

// Inputs -----------------------------------------------------------------------

std::vector<TapRecord> read_tap_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header({"timestamp", "liters"});
  std::vector<TapRecord> out;
  std::vector<std::string> f;
  std::optional<Timestamp> last;
  while (r.next(f)) {
    const Timestamp t = r.increasing_time(f[0], last);
    out.push_back({t, r.non_negative(f[1], "liters")});
  }
  return out;
}

void write_tap_csv(const fs::path& path, const std::vector<TapRecord>& taps) {
  auto out = open_out(path);
  out << "timestamp,liters\n";
  for (const auto& t : taps) out << format_timestamp(t.time) << ',' << format_number(t.liters) << '\n';
}

std::vector<TimedValue> read_pv_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header({"timestamp", "power_kw"});
  std::vector<TimedValue> out;
  std::vector<std::string> f;
  std::optional<Timestamp> last;
  while (r.next(f)) {
    const Timestamp t = r.increasing_time(f[0], last);
    out.push_back({t, r.non_negative(f[1], "power_kw")});
  }
  return out;
}

void write_pv_csv(const fs::path& path, const RegularSeries& pv) {
  auto out = open_out(path);
  out << "timestamp,power_kw\n";
  for (std::size_t i = 0; i < pv.size(); ++i) {
    out << format_timestamp(pv.time_at(i)) << ',' << format_number(pv.values[i]) << '\n';
  }
}

WeatherFeatures read_weather_csv(const fs::path& path) {
  CsvReader r(path);
  if (r.header().size() < 2 || r.header()[0] != "timestamp") {
    r.fail_at(1, "expected header 'timestamp,<feature columns>'");
  }
  WeatherFeatures w;
  w.columns.assign(r.header().begin() + 1, r.header().end());
  std::vector<std::string> f;
  std::optional<Timestamp> last;
  while (r.next(f)) {
    w.times.push_back(r.increasing_time(f[0], last));
    std::vector<double> row;
    for (std::size_t c = 1; c < f.size(); ++c) row.push_back(r.number(f[c], w.columns[c - 1]));
    w.rows.push_back(std::move(row));
  }
  return w;
}

void write_weather_csv(const fs::path& path, const WeatherFeatures& weather) {
  auto out = open_out(path);
  out << "timestamp";
  for (const auto& c : weather.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < weather.size(); ++i) {
    out << format_timestamp(weather.times[i]);
    for (double v : weather.rows[i]) out << ',' << format_number(v);
    out << '\n';
  }
}

std::vector<LoadRecord> read_loads_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header({"timestamp", "sh_kw", "noncontrollable_kw"});
  std::vector<LoadRecord> out;
  std::vector<std::string> f;
  std::optional<Timestamp> last;
  while (r.next(f)) {
    const Timestamp t = r.increasing_time(f[0], last);
    out.push_back({t, r.non_negative(f[1], "sh_kw"), r.non_negative(f[2], "noncontrollable_kw")});
  }
  return out;
}

void write_loads_csv(const fs::path& path, const RegularSeries& sh,
                     const RegularSeries& noncontrollable) {
  if (sh.start != noncontrollable.start || sh.step != noncontrollable.step ||
      sh.size() != noncontrollable.size()) {
    throw Error(ErrorCode::misaligned_series, "load traces are not aligned");
  }
  auto out = open_out(path);
  out << "timestamp,sh_kw,noncontrollable_kw\n";
  for (std::size_t i = 0; i < sh.size(); ++i) {
    out << format_timestamp(sh.time_at(i)) << ',' << format_number(sh.values[i]) << ','
        << format_number(noncontrollable.values[i]) << '\n';
  }
}

// Results ----------------------------------------------------------------------

static const std::vector<std::string> kLedgerHeader = {
    "timestamp", "house", "scenario", "pv_kw", "dhw_kw", "sh_kw", "nc_kw", "action", "soc"};

ExperimentLedger read_ledger_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header(kLedgerHeader);
  ExperimentLedger ledger;
  std::map<long, Timestamp> last_of_house;
  std::optional<Seconds> step;
  std::vector<std::string> f;
  while (r.next(f)) {
    LedgerRow row;
    row.time = r.time(f[0]);
    row.house = static_cast<int>(r.integer(f[1], "house"));
    row.scenario = parse_scenario(r, f[2]);
    row.pv_kw = r.non_negative(f[3], "pv_kw");
    row.dhw_kw = r.non_negative(f[4], "dhw_kw");
    row.sh_kw = r.non_negative(f[5], "sh_kw");
    row.nc_kw = r.non_negative(f[6], "nc_kw");
    if (!f[7].empty()) row.action = parse_action(r, f[7]);
    row.soc = r.number(f[8], "soc");
    const auto it = last_of_house.find(row.house);
    if (it != last_of_house.end()) {
      if (row.time <= it->second) r.fail("timestamps of house " + f[1] + " do not increase");
      if (!step) step = row.time - it->second;
    }
    last_of_house[row.house] = row.time;
    ledger.rows.push_back(row);
  }
  if (step) ledger.step = *step;
  return ledger;
}

void write_ledger_csv(const fs::path& path, const ExperimentLedger& ledger) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < kLedgerHeader.size(); ++c) out << (c ? "," : "") << kLedgerHeader[c];
  out << '\n';
  for (const auto& r : ledger.rows) {
    out << format_timestamp(r.time) << ',' << r.house << ',' << to_string(r.scenario) << ','
        << format_number(r.pv_kw) << ',' << format_number(r.dhw_kw) << ','
        << format_number(r.sh_kw) << ',' << format_number(r.nc_kw) << ',';
    if (r.action) out << to_int(*r.action);
    out << ',' << format_number(r.soc) << '\n';
  }
}

static const std::vector<std::string> kKpiHeader = {
    "scenario",         "days",
    "pv_captured_by_dhw", "pv_captured_by_total",
    "pv_captured_by_sh",  "el_consumption_per_day",
    "pv_production_per_day", "sh_consumption_per_day"};

KpiReport read_kpis_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header(kKpiHeader);
  KpiReport report;
  std::vector<std::string> f;
  while (r.next(f)) {
    ScenarioKpis k;
    k.scenario = parse_scenario(r, f[0]);
    k.days = r.non_negative(f[1], "days");
    k.pv_captured_by_dhw = r.non_negative(f[2], kKpiHeader[2]);
    k.pv_captured_by_total = r.non_negative(f[3], kKpiHeader[3]);
    k.pv_captured_by_sh = r.non_negative(f[4], kKpiHeader[4]);
    k.el_consumption_per_day = r.non_negative(f[5], kKpiHeader[5]);
    k.pv_production_per_day = r.non_negative(f[6], kKpiHeader[6]);
    k.sh_consumption_per_day = r.non_negative(f[7], kKpiHeader[7]);
    (k.scenario == Scenario::active ? report.active : report.thermostat) = k;
  }
  return report;
}

void write_kpis_csv(const fs::path& path, const KpiReport& kpis) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < kKpiHeader.size(); ++c) out << (c ? "," : "") << kKpiHeader[c];
  out << '\n';
  for (const ScenarioKpis* k : {&kpis.thermostat, &kpis.active}) {
    out << to_string(k->scenario) << ',' << format_number(k->days) << ','
        << format_number(k->pv_captured_by_dhw) << ',' << format_number(k->pv_captured_by_total)
        << ',' << format_number(k->pv_captured_by_sh) << ','
        << format_number(k->el_consumption_per_day) << ','
        << format_number(k->pv_production_per_day) << ','
        << format_number(k->sh_consumption_per_day) << '\n';
  }
}

void write_commands_csv(const fs::path& path, const std::vector<CommandRecord>& commands) {
  auto out = open_out(path);
  out << "timestamp,house,scenario,action,soc_before,policy_id\n";
  for (const auto& c : commands) {
    out << format_timestamp(c.time) << ',' << c.house << ',' << to_string(c.scenario) << ','
        << to_int(c.action) << ',' << format_number(c.soc_before) << ',' << c.policy_id << '\n';
  }
}

void write_policy_map_csv(const fs::path& path, const std::vector<PolicyMapRow>& rows) {
  auto out = open_out(path);
  out << "house,issued,stage,soc,action\n";
  for (const auto& r : rows) {
    out << r.house << ',' << format_timestamp(r.issued) << ',' << r.stage << ','
        << format_number(r.soc) << ',' << to_int(r.action) << '\n';
  }
}

void write_hourly_profiles_csv(const fs::path& path, const std::vector<HourlyProfileRow>& rows) {
  auto out = open_out(path);
  out << "scenario,hour,pv_kw,dhw_kw,sh_kw,total_kw\n";
  for (const auto& r : rows) {
    out << to_string(r.scenario) << ',' << r.hour << ',' << format_number(r.pv_kw) << ','
        << format_number(r.dhw_kw) << ',' << format_number(r.sh_kw) << ','
        << format_number(r.total_kw) << '\n';
  }
}

std::vector<QSurfaceRow> q_surface(const Policy& policy, const std::vector<double>& soc_points) {
  std::vector<QSurfaceRow> rows;
  for (int n = 1; n <= policy.horizon(); ++n) {
    for (double x : soc_points) {
      for (Action u : kActions) rows.push_back({n, x, u, policy.q_value(n, x, u)});
    }
  }
  return rows;
}

void write_qsurface_csv(const fs::path& path, const std::vector<QSurfaceRow>& rows) {
  auto out = open_out(path);
  out << "stage,soc,action,q_value\n";
  for (const auto& r : rows) {
    out << r.stage << ',' << format_number(r.soc) << ',' << to_int(r.action) << ','
        << format_number(r.q_value) << '\n';
  }
}

std::vector<QSurfaceRow> read_qsurface_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header({"stage", "soc", "action", "q_value"});
  std::vector<QSurfaceRow> rows;
  std::vector<std::string> f;
  while (r.next(f)) {
    rows.push_back({static_cast<int>(r.integer(f[0], "stage")), r.number(f[1], "soc"),
                    parse_action(r, f[2]), r.number(f[3], "q_value")});
  }
  return rows;
}

// Ingested houses ----------------------------------------------------------------

namespace {

/// Regularizes at the data's own resolution, then holds each value over the
/// finer simulation steps.
RegularSeries on_step_grid(const std::vector<TimedValue>& samples, Seconds step,
                           const std::string& what) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::insufficient_data, what + " needs at least two samples");
  }
  Seconds native = samples[1].time - samples[0].time;
  for (std::size_t i = 2; i < samples.size(); ++i) {
    native = std::min(native, samples[i].time - samples[i - 1].time);
  }
  if (native % step != Seconds{0}) {
    throw Error(ErrorCode::misaligned_series,
                what + " resolution must be a multiple of the simulation step");
  }
  const RegularSeries coarse = regularize(samples, native);
  const auto repeat = static_cast<std::size_t>(native / step);
  RegularSeries out{coarse.start, step, {}};
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!std::isfinite(coarse.values[i])) {
      throw Error(ErrorCode::trace_coverage,
                  what + " has a gap at " + format_timestamp(coarse.time_at(i)));
    }
    out.values.insert(out.values.end(), repeat, coarse.values[i]);
  }
  return out;
}

}  // namespace

HouseProfile house_from_data(std::string name, const BufferParams& buffer, double feed_temperature,
                             const std::vector<TapRecord>& taps,
                             const std::vector<TimedValue>& pv,
                             const std::vector<LoadRecord>& loads,
                             const WeatherFeatures& weather, Seconds step) {
  HouseProfile h;
  h.name = std::move(name);
  h.buffer = buffer;
  h.feed_temperature = feed_temperature;
  h.step = step;
  h.pv = on_step_grid(pv, step, "PV");
  h.history_start = h.pv.start;
  for (double v : h.pv.values) h.pv_peak_kw = std::max(h.pv_peak_kw, v);

  auto align = [&](RegularSeries s, const std::string& what) {
    if (s.start > h.pv.start || s.end() < h.pv.end()) {
      throw Error(ErrorCode::trace_coverage, what + " does not cover the PV span");
    }
    return s.slice(h.pv.start, h.pv.size());
  };
  if (loads.empty()) {
    h.sh = RegularSeries{h.pv.start, step, std::vector<double>(h.pv.size(), 0.0)};
    h.noncontrollable = h.sh;
  } else {
    std::vector<TimedValue> sh, nc;
    for (const auto& l : loads) {
      sh.push_back({l.time, l.sh_kw});
      nc.push_back({l.time, l.noncontrollable_kw});
    }
    h.sh = align(on_step_grid(sh, step, "space heating"), "space heating");
    h.noncontrollable = align(on_step_grid(nc, step, "non-controllable load"),
                              "non-controllable load");
  }

  h.taps = RegularSeries{h.pv.start, step, std::vector<double>(h.pv.size(), 0.0)};
  for (const auto& t : taps) {
    const auto i = h.taps.index_of(t.time);
    if (i < h.taps.size()) h.taps.values[i] += t.liters;
  }
  weather.validate();
  h.weather = weather;
  h.weather_forecast = weather;
  return h;
}

// Forecast models ------------------------------------------------------------------

std::string forecast_model_to_json(const ForecastModel& model) {
  nlohmann::json j;
  j["n_history"] = model.n_history;
  j["k_horizon"] = model.k_horizon;
  j["step_seconds"] = model.step.count();
  j["peak_kw"] = model.peak_kw;
  j["weather_columns"] = model.weather_columns;
  j["per_step"] = nlohmann::json::array();
  for (const auto& r : model.per_step) {
    const auto* et = dynamic_cast<const ExtraTreesRegressor*>(r.get());
    if (!et) throw Error(ErrorCode::invalid_argument, "only extra-trees regressors serialize");
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : et->model().trees()) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree.nodes()) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.count});
      }
      trees.push_back(std::move(nodes));
    }
    j["per_step"].push_back({{"dimension", et->model().dimension()}, {"trees", std::move(trees)}});
  }
  return j.dump();
}

ForecastModel forecast_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ForecastModel m;
    m.n_history = j.at("n_history").get<int>();
    m.k_horizon = j.at("k_horizon").get<int>();
    m.step = Seconds{j.at("step_seconds").get<long>()};
    m.peak_kw = j.at("peak_kw").get<double>();
    m.weather_columns = j.at("weather_columns").get<std::vector<std::string>>();
    for (const auto& s : j.at("per_step")) {
      std::vector<Tree> trees;
      for (const auto& t : s.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : t) {
          nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                           n.at(3).get<int>(), n.at(4).get<double>(), n.at(5).get<int>()});
        }
        trees.emplace_back(std::move(nodes));
      }
      m.per_step.push_back(std::make_shared<ExtraTreesRegressor>(
          TrainedEnsemble(s.at("dimension").get<std::size_t>(), std::move(trees))));
    }
    if (m.per_step.size() != static_cast<std::size_t>(m.k_horizon)) {
      throw Error(ErrorCode::schema_violation, "per_step count differs from k_horizon");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("forecast model JSON: ") + e.what());
  }
}

// Run configuration ----------------------------------------------------------------

void RunConfig::validate() const {
  buffer.validate();
  if (!(feed_temperature < buffer.t_min)) {
    throw Error(ErrorCode::validation, "buffer.feed_temperature must be below buffer.t_min");
  }
  thermostat.validate(buffer);
  controller.validate();
  fqi.validate();
  forecaster.validate();
  if (fqi.step != controller.refit_period) {
    throw Error(ErrorCode::validation, "fqi step must equal controller.refit_minutes");
  }
  if (tap_window_days < 1) throw Error(ErrorCode::validation, "tap.window_days must be >= 1");
  if (loss_window_days < 1) throw Error(ErrorCode::validation, "loss.window_days must be >= 1");
  if (weeks < 2) throw Error(ErrorCode::validation, "experiment.weeks must be >= 2");
  if (warmup_weeks < 0) throw Error(ErrorCode::validation, "experiment.warmup_weeks must be >= 0");
  if (houses < 1) throw Error(ErrorCode::validation, "experiment.houses must be >= 1");
  if (prehistory_days < 0) {
    throw Error(ErrorCode::validation, "experiment.prehistory_days must be >= 0");
  }
  const bool any_input = tap_csv || pv_csv || weather_csv || loads_csv;
  if (any_input && !(tap_csv && pv_csv && weather_csv)) {
    throw Error(ErrorCode::validation, "input.tap, input.pv and input.weather go together");
  }
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.start = start;
  e.weeks = weeks;
  e.warmup_weeks = warmup_weeks;
  e.first_scenario = first_scenario;
  e.controller = controller;
  e.fqi = fqi;
  e.fqi.horizon_steps = controller.horizon_steps();
  e.thermostat = thermostat;
  e.tap_window = kDay * tap_window_days;
  e.loss_window = kDay * loss_window_days;
  e.forecaster = forecaster;
  return e;
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

double as_double(const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw std::invalid_argument("not a number");
  }
  return x;
}

long as_long(const std::string& v) {
  long x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw std::invalid_argument("not an integer");
  }
  return x;
}

int as_int(const std::string& v) { return static_cast<int>(as_long(v)); }

template <class T>
Setter real(T RunConfig::*group, double T::*field) {
  return [=](RunConfig& c, const std::string& v) { c.*group.*field = as_double(v); };
}

template <class T>
Setter whole(T RunConfig::*group, int T::*field) {
  return [=](RunConfig& c, const std::string& v) { c.*group.*field = as_int(v); };
}

Setter whole(int RunConfig::*field) {
  return [=](RunConfig& c, const std::string& v) { c.*field = as_int(v); };
}

Setter path(std::optional<fs::path> RunConfig::*field) {
  return [=](RunConfig& c, const std::string& v) { c.*field = fs::path(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) {
         const long s = as_long(v);
         if (s < 0) throw std::invalid_argument("negative seed");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"input.tap", path(&RunConfig::tap_csv)},
      {"input.pv", path(&RunConfig::pv_csv)},
      {"input.weather", path(&RunConfig::weather_csv)},
      {"input.loads", path(&RunConfig::loads_csv)},

      {"buffer.volume_liters", real(&RunConfig::buffer, &BufferParams::volume_liters)},
      {"buffer.t_min", real(&RunConfig::buffer, &BufferParams::t_min)},
      {"buffer.t_max", real(&RunConfig::buffer, &BufferParams::t_max)},
      {"buffer.c_p", real(&RunConfig::buffer, &BufferParams::c_p)},
      {"buffer.water_density", real(&RunConfig::buffer, &BufferParams::water_density)},
      {"buffer.hp_power_kw", real(&RunConfig::buffer, &BufferParams::hp_electrical_power)},
      {"buffer.cop", real(&RunConfig::buffer, &BufferParams::cop)},
      {"buffer.loss_coefficient", real(&RunConfig::buffer, &BufferParams::loss_coefficient)},
      {"buffer.ambient_temperature",
       real(&RunConfig::buffer, &BufferParams::ambient_temperature)},
      {"buffer.energy_form", [](RunConfig& c, const std::string& v) {
         if (v == "additive") c.buffer.energy_form = EnergyForm::additive;
         else if (v == "literal_minus") c.buffer.energy_form = EnergyForm::literal_minus;
         else throw std::invalid_argument("expected additive or literal_minus");
       }},
      {"buffer.feed_temperature",
       [](RunConfig& c, const std::string& v) { c.feed_temperature = as_double(v); }},

      {"thermostat.setpoint", real(&RunConfig::thermostat, &ThermostatConfig::setpoint)},

      {"controller.refit_minutes", [](RunConfig& c, const std::string& v) {
         c.controller.refit_period = kMinute * as_long(v);
         c.fqi.step = c.controller.refit_period;
       }},
      {"controller.act_minutes",
       [](RunConfig& c, const std::string& v) { c.controller.act_period = kMinute * as_long(v); }},
      {"controller.horizon_hours", whole(&RunConfig::controller, &ControllerConfig::horizon_hours)},

      {"fqi.soc_grid_points", whole(&RunConfig::fqi, &FqiConfig::soc_grid_points)},
      {"fqi.samples_per_point", whole(&RunConfig::fqi, &FqiConfig::samples_per_point)},
      {"fqi.n_trees", [](RunConfig& c, const std::string& v) { c.fqi.trees.n_trees = as_int(v); }},
      {"fqi.k_splits", [](RunConfig& c, const std::string& v) { c.fqi.trees.k_splits = as_int(v); }},
      {"fqi.n_min", [](RunConfig& c, const std::string& v) { c.fqi.trees.n_min = as_int(v); }},

      {"forecast.n_history", whole(&RunConfig::forecaster, &ForecasterParams::n_history)},
      {"forecast.k_horizon", whole(&RunConfig::forecaster, &ForecasterParams::k_horizon)},
      {"forecast.peak_kw",
       [](RunConfig& c, const std::string& v) { c.forecaster.peak_kw = as_double(v); }},
      {"forecast.n_trees",
       [](RunConfig& c, const std::string& v) { c.forecaster.trees.n_trees = as_int(v); }},
      {"forecast.k_splits",
       [](RunConfig& c, const std::string& v) { c.forecaster.trees.k_splits = as_int(v); }},
      {"forecast.n_min",
       [](RunConfig& c, const std::string& v) { c.forecaster.trees.n_min = as_int(v); }},

      {"tap.window_days", whole(&RunConfig::tap_window_days)},
      {"loss.window_days", whole(&RunConfig::loss_window_days)},

      {"experiment.weeks", whole(&RunConfig::weeks)},
      {"experiment.warmup_weeks", whole(&RunConfig::warmup_weeks)},
      {"experiment.houses", whole(&RunConfig::houses)},
      {"experiment.prehistory_days", whole(&RunConfig::prehistory_days)},
      {"experiment.start",
       [](RunConfig& c, const std::string& v) { c.start = parse_timestamp(v); }},
      {"experiment.first_scenario",
       [](RunConfig& c, const std::string& v) { c.first_scenario = scenario_from_string(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty() || text == "\r") continue;
    const auto eq = text.find('=');
    const auto where = "config line " + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw Error(ErrorCode::validation, where + "expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    if (!value.empty() && value.back() == '\r') value.pop_back();
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::validation, where + "unknown key '" + key + "'");
    try {
      it->second(config, value);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::validation,
                  where + "bad value '" + value + "' for " + key + " (" + e.what() + ")");
    }
  }
  config.fqi.horizon_steps = config.controller.horizon_steps();
  config.validate();
  return config;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::file_not_found, "cannot open config " + path.string());
  return parse_config(in);
}

std::vector<HouseProfile> synth_houses(const RunConfig& config) {
  const auto archetypes = default_archetypes();
  const Timestamp history_start = config.start - kDay * config.prehistory_days;
  const int days = config.prehistory_days + 7 * (config.warmup_weeks + config.weeks);
  std::vector<HouseProfile> houses;
  for (int h = 0; h < config.houses; ++h) {
    HouseArchetype a = archetypes[static_cast<std::size_t>(h) % archetypes.size()];
    if (h >= static_cast<int>(archetypes.size())) a.name = "house" + std::to_string(h + 1);
    a.buffer = config.buffer;
    a.feed_temperature = config.feed_temperature;
    houses.push_back(synth_house(a, history_start, days,
                                 derive_seed(config.seed, {1000, static_cast<std::uint64_t>(h)})));
  }
  return houses;
}

}  // namespace dhw
