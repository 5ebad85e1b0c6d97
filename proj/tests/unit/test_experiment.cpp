#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "dhw/error.hpp"
#include "dhw/experiment.hpp"
#include "dhw/rng.hpp"

using namespace dhw;

namespace {

const Timestamp kMonday = parse_timestamp("2024-04-29T00:00:00Z");

LedgerRow row(Timestamp t, Scenario s, double pv, double dhw, double sh = 0, double nc = 0) {
  LedgerRow r;
  r.time = t;
  r.scenario = s;
  r.pv_kw = pv;
  r.dhw_kw = dhw;
  r.sh_kw = sh;
  r.nc_kw = nc;
  return r;
}

bool same_rows(const std::vector<LedgerRow>& a, const std::vector<LedgerRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.time != y.time || x.house != y.house || x.scenario != y.scenario || x.pv_kw != y.pv_kw ||
        x.dhw_kw != y.dhw_kw || x.sh_kw != y.sh_kw || x.nc_kw != y.nc_kw || x.action != y.action ||
        x.soc != y.soc) {
      return false;
    }
  }
  return true;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.start = kMonday;
  cfg.warmup_weeks = 1;
  cfg.weeks = 2;
  cfg.fqi.soc_grid_points = 11;
  cfg.fqi.samples_per_point = 20;
  cfg.fqi.trees.n_trees = 10;
  cfg.forecaster.trees.n_trees = 5;
  return cfg;
}

std::vector<HouseProfile> small_houses(const ExperimentConfig& cfg, int n) {
  const auto archetypes = default_archetypes();
  std::vector<HouseProfile> out;
  const int days = 14 + 7 * (cfg.warmup_weeks + cfg.weeks);
  for (int h = 0; h < n; ++h) {
    out.push_back(synth_house(archetypes[static_cast<std::size_t>(h)], cfg.start - 14 * kDay, days,
                              derive_seed(99, {static_cast<std::uint64_t>(h)})));
  }
  return out;
}

/// One small two-house run shared by the tests below.
const ExperimentResult& shared_run() {
  static const ExperimentResult result = [] {
    const auto cfg = small_config();
    return run_experiment(small_houses(cfg, 2), cfg, 7);
  }();
  return result;
}

}  // namespace

// Synthetic houses --------------------------------------------------------------

TEST(SynthHouse, ZeroDrawArchetype) {
  HouseArchetype a;
  a.weekday_taps.clear();
  const auto h = synth_house(a, kMonday, 7, 1);
  for (double v : h.taps.values) EXPECT_EQ(v, 0.0);
}

TEST(SynthHouse, ZeroPeakGivesZeroPv) {
  HouseArchetype a;
  a.pv_peak_kw = 0.0;
  const auto h = synth_house(a, kMonday, 7, 1);
  for (double v : h.pv.values) EXPECT_EQ(v, 0.0);
}

TEST(SynthHouse, TracesAreAlignedAndNonNegative) {
  const auto h = synth_house(HouseArchetype{}, kMonday, 10, 3);
  EXPECT_EQ(h.taps.size(), 10u * 288);
  for (const RegularSeries* s : {&h.taps, &h.pv, &h.sh, &h.noncontrollable}) {
    EXPECT_EQ(s->start, kMonday);
    EXPECT_EQ(s->step, 5 * kMinute);
    EXPECT_EQ(s->size(), h.taps.size());
    for (double v : s->values) EXPECT_GE(v, 0.0);
  }
  EXPECT_EQ(h.weather.size(), 240u);
  EXPECT_NO_THROW(h.weather.validate());
  EXPECT_NO_THROW(h.check_coverage(kMonday, kMonday + 10 * kDay));
  EXPECT_THROW(h.check_coverage(kMonday, kMonday + 11 * kDay), Error);
  // PV only between sunrise and sunset.
  for (std::size_t i = 0; i < h.pv.size(); ++i) {
    const int hour = hour_of_day(h.pv.time_at(i));
    if (hour < 7 || hour >= 19) EXPECT_EQ(h.pv.values[i], 0.0);
  }
}

TEST(SynthHouse, SeedsVaryTheDrawsButNotTheShape) {
  const auto a = synth_house(HouseArchetype{}, kMonday, 28, 1);
  const auto b = synth_house(HouseArchetype{}, kMonday, 28, 2);
  EXPECT_NE(a.taps.values, b.taps.values);
  EXPECT_NE(a.pv.values, b.pv.values);
  // Most volume sits in the morning and evening clusters for both.
  for (const auto* h : {&a, &b}) {
    double total = 0, clustered = 0;
    for (std::size_t i = 0; i < h->taps.size(); ++i) {
      const double v = h->taps.values[i];
      total += v;
      const int hour = hour_of_day(h->taps.time_at(i));
      if ((hour >= 5 && hour <= 10) || (hour >= 17)) clustered += v;
    }
    EXPECT_GT(clustered, 0.9 * total);
  }
  const auto again = synth_house(HouseArchetype{}, kMonday, 28, 1);
  EXPECT_EQ(a.taps.values, again.taps.values);
}

// Scenario schedule -------------------------------------------------------------

TEST(ExperimentConfig, WeeksAlternate) {
  ExperimentConfig cfg = small_config();
  EXPECT_EQ(cfg.scenario_at(cfg.start), Scenario::thermostat);  // warm-up
  EXPECT_EQ(cfg.scenario_at(cfg.measured_start()), Scenario::thermostat);
  EXPECT_EQ(cfg.scenario_at(cfg.measured_start() + kWeek), Scenario::active);
  cfg.first_scenario = Scenario::active;
  EXPECT_EQ(cfg.scenario_at(cfg.measured_start() + kWeek - kMinute), Scenario::active);
  EXPECT_EQ(cfg.scenario_at(cfg.measured_start() + kWeek), Scenario::thermostat);
  cfg.weeks = 1;
  EXPECT_THROW(cfg.validate(), Error);
}

// Indicators --------------------------------------------------------------------

TEST(Kpis, DhwFollowingPvCapturesAll) {
  ExperimentLedger l;
  for (int i = 0; i < 288; ++i) {
    const Timestamp t = kMonday + 5 * kMinute * i;
    const int h = hour_of_day(t);
    const double pv = h >= 8 && h < 16 ? 2.0 : 0.0;
    l.rows.push_back(row(t, Scenario::active, pv, pv));
  }
  const auto k = compute_kpis(l);
  EXPECT_NEAR(k.active.pv_captured_by_dhw, 100.0, 1e-9);
  EXPECT_NEAR(k.active.days, 1.0, 1e-12);
  EXPECT_NEAR(k.active.pv_production_per_day, 16.0, 1e-9);
  EXPECT_NEAR(k.active.el_consumption_per_day, 16.0, 1e-9);
  EXPECT_EQ(k.thermostat.days, 0.0);
  EXPECT_EQ(k.thermostat.pv_captured_by_dhw, 0.0);
}

TEST(Kpis, NightDhwCapturesNothing) {
  ExperimentLedger l;
  for (int i = 0; i < 288; ++i) {
    const Timestamp t = kMonday + 5 * kMinute * i;
    const int h = hour_of_day(t);
    l.rows.push_back(row(t, Scenario::thermostat, h >= 8 && h < 16 ? 3.0 : 0.0, h < 4 ? 2.0 : 0.0));
  }
  EXPECT_EQ(compute_kpis(l).thermostat.pv_captured_by_dhw, 0.0);
}

TEST(Kpis, ZeroPvReportsZero) {
  ExperimentLedger l;
  for (int i = 0; i < 24; ++i) {
    l.rows.push_back(row(kMonday + 5 * kMinute * i, Scenario::thermostat, 0.0, 2.0, 1.0, 0.5));
    l.rows.push_back(row(kMonday + 5 * kMinute * i, Scenario::active, 0.0, 2.0, 1.0, 0.5));
  }
  const auto k = compute_kpis(l);
  for (Scenario s : {Scenario::thermostat, Scenario::active}) {
    EXPECT_EQ(k.of(s).pv_captured_by_dhw, 0.0);
    EXPECT_EQ(k.of(s).pv_captured_by_sh, 0.0);
    EXPECT_EQ(k.of(s).pv_captured_by_total, 0.0);
  }
}

TEST(Kpis, EmptyLedger) {
  try {
    compute_kpis(ExperimentLedger{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_ledger);
  }
}

TEST(KpisProperty, BoundsOrderingAndIsolation) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    ExperimentLedger l;
    double pv_sum = 0, self = 0, injected = 0;
    for (int i = 0; i < 500; ++i) {
      const Scenario s = i % 3 == 0 ? Scenario::active : Scenario::thermostat;
      const double pv = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0, 5);
      const auto r = row(kMonday + 5 * kMinute * i, s, pv, rng.uniform() < 0.7 ? 0.0 : 2.0,
                         rng.uniform(0, 1.5), rng.uniform(0, 1));
      l.rows.push_back(r);
      const double total = r.dhw_kw + r.sh_kw + r.nc_kw;
      pv_sum += pv;
      self += std::min(pv, total);
      injected += std::max(0.0, pv - total);
    }
    // Every PV kWh is either consumed on site or injected.
    EXPECT_NEAR(pv_sum, self + injected, 1e-9 * pv_sum);

    const auto k = compute_kpis(l);
    for (Scenario s : {Scenario::thermostat, Scenario::active}) {
      const auto& x = k.of(s);
      for (double pct : {x.pv_captured_by_dhw, x.pv_captured_by_sh, x.pv_captured_by_total}) {
        EXPECT_GE(pct, 0.0);
        EXPECT_LE(pct, 100.0 + 1e-9);
      }
      EXPECT_LE(x.pv_captured_by_dhw, x.pv_captured_by_total + 1e-9);
      EXPECT_LE(x.pv_captured_by_sh, x.pv_captured_by_total + 1e-9);
    }

    // Editing the active rows leaves the thermostat indicators untouched.
    ExperimentLedger edited = l;
    for (auto& r : edited.rows) {
      if (r.scenario == Scenario::active) r.dhw_kw = rng.uniform(0, 3);
    }
    const auto k2 = compute_kpis(edited);
    EXPECT_EQ(k.thermostat.pv_captured_by_dhw, k2.thermostat.pv_captured_by_dhw);
    EXPECT_EQ(k.thermostat.el_consumption_per_day, k2.thermostat.el_consumption_per_day);
  }
}

TEST(HourlyProfiles, AveragesPerScenarioAndHour) {
  ExperimentLedger l;
  for (int d = 0; d < 2; ++d) {
    for (int i = 0; i < 288; ++i) {
      const Timestamp t = kMonday + kDay * d + 5 * kMinute * i;
      l.rows.push_back(row(t, d == 0 ? Scenario::thermostat : Scenario::active,
                           hour_of_day(t) == 12 ? 3.0 : 0.0, d == 0 ? 1.0 : 0.0, 0.5, 0.25));
    }
  }
  const auto p = hourly_profiles(l);
  ASSERT_EQ(p.size(), 48u);
  EXPECT_EQ(p[12].scenario, Scenario::thermostat);
  EXPECT_EQ(p[12].hour, 12);
  EXPECT_EQ(p[12].pv_kw, 3.0);
  EXPECT_EQ(p[12].total_kw, 1.75);
  EXPECT_EQ(p[24 + 3].scenario, Scenario::active);
  EXPECT_EQ(p[24 + 3].dhw_kw, 0.0);
  EXPECT_EQ(p[24 + 3].total_kw, 0.75);
}

// Simulation --------------------------------------------------------------------

TEST(Experiment, OneWeekPerScenario) {
  const auto& r = shared_run();
  const auto cfg = small_config();
  ASSERT_EQ(r.ledger.rows.size(), 2u * 2 * 7 * 288);
  for (const auto& row : r.ledger.rows) {
    EXPECT_GE(row.time, cfg.measured_start());
    EXPECT_LT(row.time, cfg.end());
    const bool first_week = row.time < cfg.measured_start() + kWeek;
    EXPECT_EQ(row.scenario, first_week ? Scenario::thermostat : Scenario::active);
    EXPECT_GE(row.dhw_kw, 0.0);
    EXPECT_LE(row.dhw_kw, 2.0 + 1e-12);
  }
  const auto k = compute_kpis(r.ledger);
  EXPECT_NEAR(k.thermostat.days, 14.0, 1e-9);
  EXPECT_NEAR(k.active.days, 14.0, 1e-9);
}

TEST(Experiment, LedgerIsContiguousPerHouse) {
  const auto& r = shared_run();
  for (std::size_t i = 1; i < r.ledger.rows.size(); ++i) {
    const auto& a = r.ledger.rows[i - 1];
    const auto& b = r.ledger.rows[i];
    if (a.house == b.house) EXPECT_EQ(b.time - a.time, 5 * kMinute);
  }
}

TEST(Experiment, ComfortHolds) {
  const auto& r = shared_run();
  EXPECT_GT(r.comfort.tap_events, 0);
  EXPECT_EQ(r.comfort.late_tap_events, 0);
  EXPECT_LE(r.comfort.max_buc_latency, small_config().controller.act_period);
}

TEST(Experiment, ActiveWeeksIssuePolicyCommands) {
  const auto& r = shared_run();
  int charges = 0;
  for (const auto& c : r.commands) {
    if (c.scenario == Scenario::active) {
      EXPECT_GT(c.policy_id, 0);
      if (c.action != Action::delay) ++charges;
    } else {
      EXPECT_EQ(c.policy_id, 0);
    }
  }
  EXPECT_GT(charges, 0);
  // One map per house at the first midnight refit of an active week.
  EXPECT_EQ(r.policy_map.size(), 2u * 24 * 21);
}

TEST(Experiment, DeterministicAndThreadIndependent) {
  auto cfg = small_config();
  const auto houses = small_houses(cfg, 2);
  cfg.threads = 2;
  const auto parallel = run_experiment(houses, cfg, 7);
  EXPECT_TRUE(same_rows(shared_run().ledger.rows, parallel.ledger.rows));
  ASSERT_EQ(shared_run().commands.size(), parallel.commands.size());
  for (std::size_t i = 0; i < parallel.commands.size(); ++i) {
    EXPECT_EQ(shared_run().commands[i].action, parallel.commands[i].action);
    EXPECT_EQ(shared_run().commands[i].time, parallel.commands[i].time);
  }
}

TEST(Experiment, RejectsShortTraces) {
  auto cfg = small_config();
  auto houses = small_houses(cfg, 1);
  houses[0].pv.values.resize(houses[0].pv.size() - 1);
  try {
    run_experiment(houses, cfg, 1);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::trace_coverage);
  }
}
