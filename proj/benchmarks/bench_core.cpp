#include <cmath>

#include <benchmark/benchmark.h>

#include "dhw/buffer.hpp"
#include "dhw/extra_trees.hpp"
#include "dhw/fqi.hpp"
#include "dhw/loss_model.hpp"
#include "dhw/rng.hpp"

using namespace dhw;

namespace {

Dataset sine_data(int n) {
  Dataset d(4);
  Rng rng(1);
  for (int i = 0; i < n; ++i) {
    const double x[4] = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    d.add(x, std::sin(6 * x[0]) + x[1] * x[2]);
  }
  return d;
}

const Timestamp kStart = parse_timestamp("2024-05-06T00:00:00Z");

ForecastSeries clear_day() {
  std::vector<double> kw(24, 0.0);
  for (int h = 7; h < 19; ++h) kw[static_cast<std::size_t>(h)] = 4.0 * std::sin(M_PI * (h - 6.5) / 12);
  return ForecastSeries{kStart, kHour, kw};
}

}  // namespace

static void BM_TreesFit(benchmark::State& state) {
  const Dataset d = sine_data(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_extra_trees(d, TreeParams{.n_trees = 50, .seed = 1}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TreesFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_TreesPredict(benchmark::State& state) {
  const Dataset d = sine_data(5000);
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 50, .seed = 1});
  const double x[4] = {0.3, 0.6, 0.1, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
}
BENCHMARK(BM_TreesPredict);

static void BM_FitPolicy(benchmark::State& state) {
  const BufferParams params;
  FqiConfig cfg;
  cfg.samples_per_point = static_cast<int>(state.range(0));
  TapModel::Bins bins;
  for (auto& b : bins) b = {0.0, 0.0, 0.0, 25.0};
  const TapModel taps(bins, kHour, 60 * kDay);
  const LossModel loss = physical_loss_model(params, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_policy(cfg, kStart, taps, loss, clear_day(), params, 10.0));
  }
}
BENCHMARK(BM_FitPolicy)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Transition(benchmark::State& state) {
  const BufferParams params;
  const LossModel loss = physical_loss_model(params, 10.0);
  const ForecastSeries pv = clear_day();
  const BufferState s{50.0, 10.0, 30.0, std::nullopt};
  const Timestamp t = kStart + 10 * kHour;
  for (auto _ : state) {
    const auto r = transition(s, Action::charge_full, 5.0, pv, t, 5 * kMinute, params, loss);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Transition);

BENCHMARK_MAIN();
