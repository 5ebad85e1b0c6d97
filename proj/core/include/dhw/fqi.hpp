#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dhw/buffer.hpp"
#include "dhw/extra_trees.hpp"
#include "dhw/loss_model.hpp"
#include "dhw/series.hpp"
#include "dhw/tap_model.hpp"

namespace dhw {

struct FqiConfig {
  int horizon_steps = 24;
  int soc_grid_points = 25;
  int samples_per_point = 200;
  Seconds step{kHour};
  TreeParams trees{};
  std::uint64_t seed = 0;

  void validate() const;
  /// Equidistant points on [0, 1].
  std::vector<double> soc_grid() const;
};

/// SoC-only abstraction of the buffer used for planning. Tap draws remove
/// hot water at t_max, standing loss follows the learned loss model, the
/// backup controller fires at SoC ≤ 0, and a charging action completes
/// within the step it is taken: it is charged for its whole power profile
/// (truncated at the horizon end) and lands exactly on its target.
class PlanningModel {
 public:
  struct Outcome {
    double next_soc = 0.0;
    double cost_kwh = 0.0;
    double hp_kwh = 0.0;
  };

  /// pv must cover [start, start + horizon_steps·step).
  PlanningModel(BufferParams params, double feed_temperature, LossModel loss, ForecastSeries pv,
                Timestamp start, Seconds step, int horizon_steps);

  /// Stage is 1-based.
  Outcome step(int stage, double soc, Action u, double tap_liters) const;

  Timestamp start() const { return start_; }
  Seconds step_duration() const { return step_; }
  int horizon_steps() const { return horizon_; }
  Timestamp stage_time(int stage) const { return start_ + step_ * (stage - 1); }
  double feed_temperature() const { return t_in_; }
  const BufferParams& params() const { return params_; }
  const ForecastSeries& pv() const { return pv_; }
  double soc_charge_min() const { return soc_u1_; }
  double soc_floor() const { return floor_; }
  double soc_per_liter() const { return soc_per_liter_; }

 private:
  /// ∫ min(PV, P_hp) over [a, b) seconds after start, clipped to the horizon (kWh).
  double captured(double a, double b) const;

  BufferParams params_;
  double t_in_;
  LossModel loss_;
  ForecastSeries pv_;
  Timestamp start_;
  Seconds step_;
  int horizon_;
  double span_kj_;
  double soc_u1_;
  double floor_;
  double soc_per_liter_;
  double horizon_seconds_;
  double pv_offset_;               // seconds from pv_.start to start_
};

class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual double value(double soc, Action u) const = 0;
};

struct QTrainingPoint {
  double soc = 0.0;
  Action action = Action::delay;
  double target = 0.0;
};

class QRegressor {
 public:
  virtual ~QRegressor() = default;
  virtual std::shared_ptr<const QFunction> fit(std::span<const QTrainingPoint> training,
                                               std::uint64_t seed) const = 0;
};

/// Extra-trees over the 4-vector (soc, one-hot action). The fitted forest is
/// compiled into one exact step function of SoC per action.
class ExtraTreesQRegressor final : public QRegressor {
 public:
  explicit ExtraTreesQRegressor(TreeParams params) : params_(params) {}
  std::shared_ptr<const QFunction> fit(std::span<const QTrainingPoint> training,
                                       std::uint64_t seed) const override;

 private:
  TreeParams params_;
};

/// Exact lookup at the training grid; off-grid SoC snaps to the nearest grid
/// point (lower one on ties).
class TabularQRegressor final : public QRegressor {
 public:
  std::shared_ptr<const QFunction> fit(std::span<const QTrainingPoint> training,
                                       std::uint64_t seed) const override;
};

/// Input encoding shared by the Q regressors.
std::array<double, 4> encode_q_input(double soc, Action u);

/// Piecewise-constant form of a (soc, one-hot) ensemble. Matches
/// TrainedEnsemble::predict up to floating-point rounding.
class CompiledEnsembleQ final : public QFunction {
 public:
  explicit CompiledEnsembleQ(const TrainedEnsemble& model);
  double value(double soc, Action u) const override;
  std::size_t pieces(Action u) const { return values_[static_cast<std::size_t>(u)].size(); }

 private:
  std::array<std::vector<double>, 3> breaks_;
  std::array<std::vector<double>, 3> values_;
};

struct QStage {
  int index = 0;  // 1..T
  std::vector<QTrainingPoint> training;
  std::shared_ptr<const QFunction> q;
};

/// Smallest Q wins; ties go to the smaller action.
Action argmin_action(const std::array<double, 3>& q);

class Policy {
 public:
  Policy(Timestamp start, Seconds step, std::vector<QStage> stages);

  int horizon() const { return static_cast<int>(stages_.size()); }
  Timestamp start() const { return start_; }
  Seconds step() const { return step_; }
  const QStage& stage(int n) const;
  const std::vector<QStage>& stages() const { return stages_; }

  double q_value(int stage, double soc, Action u) const;
  double min_q(int stage, double soc) const;
  Action greedy_action(int stage, double soc) const;

  /// ⌊(t − start)/step⌋ + 1, clamped to the horizon.
  int stage_at(Timestamp t) const;

 private:
  Timestamp start_;
  Seconds step_;
  std::vector<QStage> stages_;
};

/// Backward fitted Q-iteration over the SoC × action grid with Monte-Carlo
/// tap samples. Stage N draws its samples from the stream (config.seed, N),
/// visiting grid points in order and the actions within each point.
Policy fit_policy(const FqiConfig& config, const PlanningModel& model, const TapModel& tap_model,
                  const QRegressor& regressor);

/// Convenience overload using the extra-trees regressor from config.trees.
Policy fit_policy(const FqiConfig& config, Timestamp start_time, const TapModel& tap_model,
                  const LossModel& loss_model, const ForecastSeries& pv_forecast,
                  const BufferParams& params, double feed_temperature);

using DecisionRule = std::function<Action(int stage, double soc)>;

/// Monte-Carlo mean of the summed planning cost over the horizon.
double evaluate_policy(const DecisionRule& rule, const PlanningModel& model,
                       const TapModel& tap_model, double start_soc, int n_rollouts,
                       std::uint64_t seed);
double evaluate_policy(const Policy& policy, const PlanningModel& model, const TapModel& tap_model,
                       double start_soc, int n_rollouts, std::uint64_t seed);

// Exact backward induction --------------------------------------------------

struct DiscreteInstance {
  std::vector<double> grid;  // sorted SoC points
  int horizon = 0;
  /// (value, probability) pairs for stage 1..horizon.
  std::function<std::vector<std::pair<double, double>>(int stage)> outcomes;
  /// (next soc, cost) for stage, soc, action, disturbance.
  std::function<std::pair<double, double>(int stage, double soc, Action u, double w)> step;
};

struct DpSolution {
  std::vector<double> grid;
  /// q[stage-1][i][action], value[stage-1][i], policy[stage-1][i].
  std::vector<std::vector<std::array<double, 3>>> q;
  std::vector<std::vector<double>> value;
  std::vector<std::vector<Action>> policy;

  std::size_t nearest(double soc) const;
  double value_at(int stage, double soc) const { return value[stage - 1][nearest(soc)]; }
  Action action_at(int stage, double soc) const { return policy[stage - 1][nearest(soc)]; }
};

DpSolution dp_oracle(const DiscreteInstance& instance);

/// Discretized planning problem with the tap model's empirical probabilities.
DiscreteInstance make_instance(const PlanningModel& model, const TapModel& tap_model,
                               std::vector<double> grid);

}  // namespace dhw
