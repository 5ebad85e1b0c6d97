#include "dhw/loss_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhw/error.hpp"

namespace dhw {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

/// Hat-basis weights of x over the knots.
LossModel::KnotValues hat_weights(double x) {
  LossModel::KnotValues w{};
  const double scaled = clamp01(x) * static_cast<double>(LossModel::kKnots - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(scaled), LossModel::kKnots - 2);
  const double frac = scaled - static_cast<double>(k);
  w[k] = 1.0 - frac;
  w[k + 1] = frac;
  return w;
}

}  // namespace

LossModel::LossModel(const KnotValues& knot_values) : values_(knot_values) {
  for (std::size_t k = 0; k < kKnots; ++k) {
    if (!(values_[k] >= 0.0) || !std::isfinite(values_[k])) {
      throw Error(ErrorCode::validation, "loss model knot values must be finite and >= 0");
    }
    if (k > 0 && values_[k] < values_[k - 1]) {
      throw Error(ErrorCode::validation, "loss model must be non-decreasing in SoC");
    }
  }
}

double LossModel::predict(double soc) const {
  const auto w = hat_weights(soc);
  double out = 0.0;
  for (std::size_t k = 0; k < kKnots; ++k) out += w[k] * values_[k];
  return out;
}

// Knot values are reparametrized as v_j = c + d_1 + ... + d_j with c, d_i >= 0,
// which makes the monotone non-negative family a non-negativity-constrained
// least-squares problem in five unknowns. With five unknowns every active set
// can be enumerated, which yields the exact constrained optimum.
LossModel fit_loss_model(std::span<const LossObservation> observations) {
  constexpr std::size_t n_params = LossModel::kKnots;
  if (observations.size() < 2) {
    throw Error(ErrorCode::insufficient_data,
                "loss model needs at least 2 observations, got " +
                    std::to_string(observations.size()));
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& o : observations) {
    lo = std::min(lo, clamp01(o.soc));
    hi = std::max(hi, clamp01(o.soc));
  }
  if (!(hi > lo)) {
    throw Error(ErrorCode::insufficient_data, "loss observations must span distinct SoC values");
  }

  const auto rows = static_cast<Eigen::Index>(observations.size());
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(n_params));
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& o = observations[static_cast<std::size_t>(r)];
    const auto w = hat_weights(o.soc);
    design(r, 0) = 1.0;
    for (std::size_t i = 1; i < n_params; ++i) {
      double tail = 0.0;
      for (std::size_t j = i; j < n_params; ++j) tail += w[j];
      design(r, static_cast<Eigen::Index>(i)) = tail;
    }
    target(r) = o.loss_kj_per_hour;
  }

  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
  double best_residual = target.squaredNorm();
  for (unsigned mask = 1; mask < (1u << n_params); ++mask) {
    std::vector<Eigen::Index> free;
    for (std::size_t i = 0; i < n_params; ++i) {
      if (mask & (1u << i)) free.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(free.size()));
    for (std::size_t c = 0; c < free.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = design.col(free[c]);
    const Eigen::VectorXd coef = sub.completeOrthogonalDecomposition().solve(target);
    if ((coef.array() < -1e-9 * scale).any()) continue;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params));
    for (std::size_t c = 0; c < free.size(); ++c) full(free[c]) = std::max(0.0, coef(static_cast<Eigen::Index>(c)));
    const double residual = (design * full - target).squaredNorm();
    if (residual < best_residual - 1e-12 * scale * scale) {
      best_residual = residual;
      best = full;
    }
  }

  LossModel::KnotValues values{};
  double running = best(0);
  values[0] = running;
  for (std::size_t j = 1; j < n_params; ++j) {
    running += best(static_cast<Eigen::Index>(j));
    values[j] = running;
  }
  return LossModel(values);
}

}  // namespace dhw
