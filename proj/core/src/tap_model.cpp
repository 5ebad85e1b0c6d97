#include "dhw/tap_model.hpp"

#include <algorithm>
#include <string>

#include "dhw/error.hpp"

namespace dhw {

TapModel::TapModel(Bins bins, Seconds step, Seconds window)
    : bins_(std::move(bins)), step_(step), window_(window) {
  for (const auto& b : bins_) {
    for (double v : b) {
      if (!(v >= 0.0)) throw Error(ErrorCode::validation, "tap draws must be non-negative");
    }
    pooled_.insert(pooled_.end(), b.begin(), b.end());
  }
  if (pooled_.empty()) throw Error(ErrorCode::empty_history, "tap model has no draws");

  for (std::size_t i = 0; i < kTimeFeatureCount; ++i) {
    if (!bins_[i].empty()) continue;
    const TimeFeature f = TimeFeature::from_index(i);
    std::vector<double> pick;
    for (int dh : {-1, 1}) {
      const TimeFeature n{(f.hour + dh + 24) % 24, f.day_type};
      const auto& b = bins_[n.index()];
      pick.insert(pick.end(), b.begin(), b.end());
    }
    if (pick.empty()) {
      const TimeFeature other{f.hour, f.day_type == DayType::weekday ? DayType::weekend
                                                                      : DayType::weekday};
      pick = bins_[other.index()];
    }
    if (pick.empty()) pick = pooled_;
    fallback_[i] = std::move(pick);
  }
}

std::span<const double> TapModel::support(Timestamp t) const {
  const std::size_t i = time_feature(t).index();
  return bins_[i].empty() ? std::span<const double>(fallback_[i]) : std::span<const double>(bins_[i]);
}

double TapModel::sample(Timestamp t, Rng& rng) const {
  const auto values = support(t);
  return values[rng.index(values.size())];
}

TapModel TapModel::constant(double liters, Seconds step) {
  Bins bins;
  for (auto& b : bins) b = {liters};
  return TapModel(std::move(bins), step, Seconds{0});
}

std::vector<TapRecord> aggregate_draws(std::span<const TapRecord> history, Seconds step) {
  std::vector<TapRecord> out;
  for (const auto& r : history) {
    const Timestamp bucket = floor_to(r.time, step);
    if (!out.empty() && out.back().time == bucket) {
      out.back().liters += r.liters;
    } else {
      out.push_back({bucket, r.liters});
    }
  }
  return out;
}

std::vector<TapRecord> metered_draws(std::span<const TapRecord> history, Seconds step) {
  const auto sparse = aggregate_draws(history, step);
  std::vector<TapRecord> out;
  if (sparse.empty()) return out;
  out.reserve(static_cast<std::size_t>((sparse.back().time - sparse.front().time) / step) + 1);
  for (const auto& r : sparse) {
    while (!out.empty() && out.back().time + step < r.time) out.push_back({out.back().time + step, 0.0});
    out.push_back(r);
  }
  return out;
}

TapModel fit_tap_model(std::span<const TapRecord> history, Seconds window, Seconds step) {
  if (history.empty()) throw Error(ErrorCode::empty_history, "no tap history");
  if (step <= Seconds{0}) throw Error(ErrorCode::invalid_argument, "tap step must be positive");
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!(history[i].liters >= 0.0)) {
      throw Error(ErrorCode::schema_violation,
                  "negative tap volume at record " + std::to_string(i));
    }
    if (i > 0 && history[i].time <= history[i - 1].time) {
      throw Error(ErrorCode::misaligned_series,
                  "tap history timestamps must be strictly increasing (record " +
                      std::to_string(i) + ")");
    }
  }
  const Timestamp cutoff = history.back().time - window;
  auto first = std::upper_bound(history.begin(), history.end(), cutoff,
                                [](Timestamp c, const TapRecord& r) { return c < r.time; });
  const std::span<const TapRecord> recent(first, history.end());

  TapModel::Bins bins;
  for (const auto& r : aggregate_draws(recent, step)) {
    bins[time_feature(r.time).index()].push_back(r.liters);
  }
  return TapModel(std::move(bins), step, window);
}

}  // namespace dhw
