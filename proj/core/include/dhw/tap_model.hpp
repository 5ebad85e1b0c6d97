#pragma once

#include <array>
#include <span>
#include <vector>

#include "dhw/rng.hpp"
#include "dhw/time.hpp"

namespace dhw {

struct TapRecord {
  Timestamp time;
  double liters = 0.0;
};

/// Empirical conditional distribution of tapped volume per step, binned by
/// (hour of day, weekday/weekend). Each bin value is liters drawn in one step.
class TapModel {
 public:
  using Bins = std::array<std::vector<double>, kTimeFeatureCount>;

  TapModel(Bins bins, Seconds step, Seconds window);

  const std::vector<double>& bin(TimeFeature f) const { return bins_[f.index()]; }
  const Bins& bins() const { return bins_; }
  Seconds step() const { return step_; }
  Seconds window() const { return window_; }

  /// The values sampled for t: its own bin, else the ±1 hour bins of the same
  /// day type, else the same hour of the other day type, else every draw.
  std::span<const double> support(Timestamp t) const;

  /// Uniform draw from support(t).
  double sample(Timestamp t, Rng& rng) const;

  /// A model whose every bin is {liters}.
  static TapModel constant(double liters, Seconds step);

 private:
  Bins bins_;
  std::vector<double> pooled_;
  std::array<std::vector<double>, kTimeFeatureCount> fallback_;
  Seconds step_;
  Seconds window_;
};

/// Sums records into step-sized buckets. Buckets without any record are
/// absent from the result, not zero.
std::vector<TapRecord> aggregate_draws(std::span<const TapRecord> history, Seconds step);

/// Like aggregate_draws, but every step from the first bucket to the last is
/// present, with zero liters where nothing was drawn. Use this when the input
/// lists draw events only and silence means no draw.
std::vector<TapRecord> metered_draws(std::span<const TapRecord> history, Seconds step);

/// Keeps buckets whose record time lies in (last − window, last] and bins them.
TapModel fit_tap_model(std::span<const TapRecord> history, Seconds window,
                       Seconds step = kHour);

}  // namespace dhw
