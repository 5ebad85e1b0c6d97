#pragma once

#include <array>
#include <span>

namespace dhw {

struct LossObservation {
  double soc = 0.0;
  double loss_kj_per_hour = 0.0;
};

/// Standing loss (kJ/h) as a function of SoC: a non-negative, non-decreasing
/// piecewise-linear curve over equidistant knots on [0, 1]. Inputs outside
/// [0, 1] are clamped.
class LossModel {
 public:
  static constexpr std::size_t kKnots = 5;
  using KnotValues = std::array<double, kKnots>;

  /// Zero loss everywhere.
  LossModel() = default;

  /// Throws validation when the knot values are negative or decreasing.
  explicit LossModel(const KnotValues& knot_values);

  double predict(double soc) const;

  const KnotValues& knot_values() const { return values_; }
  static double knot_position(std::size_t k) {
    return static_cast<double>(k) / static_cast<double>(kKnots - 1);
  }

 private:
  KnotValues values_{};
};

/// Least-squares fit over the monotone non-negative piecewise-linear family.
/// Needs at least two observations at distinct SoC values.
LossModel fit_loss_model(std::span<const LossObservation> observations);

}  // namespace dhw
