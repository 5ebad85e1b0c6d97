#include "dhw/fqi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

void FqiConfig::validate() const {
  if (horizon_steps < 1) throw Error(ErrorCode::validation, "fqi.horizon_steps must be >= 1");
  if (soc_grid_points < 2) throw Error(ErrorCode::validation, "fqi.soc_grid_points must be >= 2");
  if (samples_per_point < 1) throw Error(ErrorCode::validation, "fqi.samples_per_point must be >= 1");
  if (step <= Seconds{0}) throw Error(ErrorCode::validation, "fqi.step must be positive");
  trees.validate();
}

std::vector<double> FqiConfig::soc_grid() const {
  std::vector<double> grid(static_cast<std::size_t>(soc_grid_points));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  }
  return grid;
}

// Planning model -------------------------------------------------------------

PlanningModel::PlanningModel(BufferParams params, double feed_temperature, LossModel loss,
                             ForecastSeries pv, Timestamp start, Seconds step, int horizon_steps)
    : params_(params),
      t_in_(feed_temperature),
      loss_(loss),
      pv_(std::move(pv)),
      start_(start),
      step_(step),
      horizon_(horizon_steps) {
  params_.validate();
  if (horizon_ < 1) throw Error(ErrorCode::validation, "planning horizon must be >= 1 step");
  if (step_ <= Seconds{0}) throw Error(ErrorCode::validation, "planning step must be positive");
  const Timestamp end = start_ + step_ * horizon_;
  if (!pv_.covers(start_, end)) {
    throw Error(ErrorCode::horizon_coverage,
                "PV forecast [" + format_timestamp(pv_.start) + ", " + format_timestamp(pv_.end()) +
                    ") does not cover the horizon [" + format_timestamp(start_) + ", " +
                    format_timestamp(end) + ")");
  }
  span_kj_ = energy_max(params_) - energy_min(params_, t_in_);
  if (!(span_kj_ > 0.0)) {
    throw Error(ErrorCode::degenerate_parameters, "E_max <= E_min for the planning model");
  }
  soc_u1_ = dhw::soc_charge_min(params_, t_in_);
  floor_ = dhw::soc_floor(params_, t_in_);
  soc_per_liter_ = params_.specific_heat() * (params_.t_max - t_in_) / span_kj_;
  horizon_seconds_ = static_cast<double>((step_ * horizon_).count());
  pv_offset_ = static_cast<double>((start_ - pv_.start).count());
}

double PlanningModel::captured(double a, double b) const {
  b = std::min(b, horizon_seconds_);
  if (b <= a) return 0.0;
  const double len = static_cast<double>(pv_.step.count());
  const double power = params_.hp_electrical_power;
  double out = 0.0;
  auto i = static_cast<std::size_t>((a + pv_offset_) / len);
  for (; i < pv_.size(); ++i) {
    const double lo = static_cast<double>(i) * len - pv_offset_;
    const double hi = lo + len;
    if (lo >= b) break;
    const double ov = std::min(b, hi) - std::max(a, lo);
    if (ov > 0.0) out += std::min(pv_.values[i], power) * ov;
  }
  return out / 3600.0;
}

PlanningModel::Outcome PlanningModel::step(int stage, double soc, Action u,
                                           double tap_liters) const {
  if (stage < 1 || stage > horizon_) {
    throw Error(ErrorCode::out_of_range_stage, "stage " + std::to_string(stage) + " outside 1.." +
                                                   std::to_string(horizon_));
  }
  const double dt_h = to_hours(step_);
  double s = std::max(floor_, soc - tap_liters * soc_per_liter_);
  s = std::max(floor_, s - loss_.predict(s) * dt_h / span_kj_);

  std::optional<double> target;
  if (s <= 0.0) target = soc_u1_;
  double requested = -std::numeric_limits<double>::infinity();
  if (u == Action::charge_min) requested = soc_u1_;
  if (u == Action::charge_full) requested = 1.0;
  if (requested > s) target = target ? std::max(*target, requested) : requested;

  const double len = static_cast<double>(pv_.step.count());
  const double a = static_cast<double>((step_ * (stage - 1)).count());
  const double b = a + static_cast<double>(step_.count());
  const double on_end =
      target ? a + (*target - s) * span_kj_ / (params_.cop * params_.hp_electrical_power) : a;
  const double power = params_.hp_electrical_power;

  // Energy injected during the step itself, per PV interval.
  double cost = 0.0;
  auto i = static_cast<std::size_t>((a + pv_offset_) / len);
  for (; i < pv_.size(); ++i) {
    const double lo = static_cast<double>(i) * len - pv_offset_;
    const double hi = lo + len;
    if (lo >= b) break;
    const double span = std::min(b, hi) - std::max(a, lo);
    if (span <= 0.0) continue;
    const double p = pv_.values[i];
    const double ov = std::max(0.0, std::min({b, hi, on_end}) - std::max(a, lo));
    cost += (p * span - std::min(p, power) * ov) / 3600.0;
  }

  Outcome out;
  out.next_soc = s;
  if (target) {
    // The part of the profile running past this step displaces later injection.
    cost -= captured(b, on_end);
    out.next_soc = *target;
    out.hp_kwh = power * (on_end - a) / 3600.0;
  }
  out.cost_kwh = cost;
  return out;
}

// Q functions ----------------------------------------------------------------

std::array<double, 4> encode_q_input(double soc, Action u) {
  std::array<double, 4> x{soc, 0.0, 0.0, 0.0};
  x[1 + static_cast<std::size_t>(u)] = 1.0;
  return x;
}

namespace {

struct Piece {
  double hi;
  double value;
};

void walk(const std::vector<TreeNode>& nodes, int id, double lo, double hi,
          const std::array<double, 4>& onehot, std::vector<Piece>& out) {
  const auto& n = nodes[static_cast<std::size_t>(id)];
  if (n.feature < 0) {
    out.push_back({hi, n.value});
    return;
  }
  if (n.feature != 0) {
    walk(nodes, onehot[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right, lo, hi,
         onehot, out);
    return;
  }
  if (n.threshold <= lo) {
    walk(nodes, n.right, lo, hi, onehot, out);
  } else if (n.threshold >= hi) {
    walk(nodes, n.left, lo, hi, onehot, out);
  } else {
    walk(nodes, n.left, lo, n.threshold, onehot, out);
    walk(nodes, n.right, n.threshold, hi, onehot, out);
  }
}

}  // namespace

CompiledEnsembleQ::CompiledEnsembleQ(const TrainedEnsemble& model) {
  if (model.dimension() != 4) {
    throw Error(ErrorCode::dimension_mismatch, "Q ensemble must take (soc, one-hot action)");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto& trees = model.trees();
  const auto n_trees = static_cast<double>(trees.size());
  std::vector<Piece> pieces;
  // (position, tree, value change) where a tree moves to its next piece.
  struct Change {
    double at;
    double delta;
  };
  std::vector<Change> changes;
  for (Action u : kActions) {
    const auto a = static_cast<std::size_t>(u);
    const auto onehot = encode_q_input(0.0, u);
    changes.clear();
    double sum = 0.0;
    for (const auto& tree : trees) {
      pieces.clear();
      walk(tree.nodes(), 0, -inf, inf, onehot, pieces);
      sum += pieces.front().value;
      for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
        changes.push_back({pieces[k].hi, pieces[k + 1].value - pieces[k].value});
      }
    }
    std::sort(changes.begin(), changes.end(),
              [](const Change& l, const Change& r) { return l.at < r.at; });

    auto& breaks = breaks_[a];
    auto& values = values_[a];
    breaks.clear();
    values.assign(1, sum / n_trees);
    for (std::size_t k = 0; k < changes.size();) {
      const double at = changes[k].at;
      for (; k < changes.size() && changes[k].at == at; ++k) sum += changes[k].delta;
      breaks.push_back(at);
      values.push_back(sum / n_trees);
    }
  }
}

double CompiledEnsembleQ::value(double soc, Action u) const {
  const auto a = static_cast<std::size_t>(u);
  const auto& b = breaks_[a];
  const auto k = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), soc) - b.begin());
  return values_[a][k];
}

std::shared_ptr<const QFunction> ExtraTreesQRegressor::fit(std::span<const QTrainingPoint> training,
                                                           std::uint64_t seed) const {
  Dataset data(4);
  for (const auto& p : training) data.add(encode_q_input(p.soc, p.action), p.target);
  TreeParams params = params_;
  params.seed = seed;
  return std::make_shared<CompiledEnsembleQ>(fit_extra_trees(data, params));
}

namespace {

std::size_t nearest_index(const std::vector<double>& grid, double x) {
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  const auto i = static_cast<std::size_t>(it - grid.begin()) - 1;
  if (i + 1 >= grid.size()) return i;
  return (x - grid[i] <= grid[i + 1] - x) ? i : i + 1;
}

class TabularQ final : public QFunction {
 public:
  TabularQ(std::vector<double> grid, std::array<std::vector<double>, 3> table)
      : grid_(std::move(grid)), table_(std::move(table)) {}

  double value(double soc, Action u) const override {
    return table_[static_cast<std::size_t>(u)][nearest_index(grid_, soc)];
  }

 private:
  std::vector<double> grid_;
  std::array<std::vector<double>, 3> table_;
};

}  // namespace

std::shared_ptr<const QFunction> TabularQRegressor::fit(std::span<const QTrainingPoint> training,
                                                        std::uint64_t) const {
  if (training.empty()) throw Error(ErrorCode::empty_training_set, "no Q training points");
  std::vector<double> grid;
  for (const auto& p : training) grid.push_back(p.soc);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  constexpr double unset = std::numeric_limits<double>::quiet_NaN();
  std::array<std::vector<double>, 3> table;
  for (auto& col : table) col.assign(grid.size(), unset);
  for (const auto& p : training) {
    const auto i = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), p.soc) -
                                            grid.begin());
    table[static_cast<std::size_t>(p.action)][i] = p.target;
  }
  for (const auto& col : table) {
    for (double v : col) {
      if (std::isnan(v)) {
        throw Error(ErrorCode::insufficient_data, "tabular Q needs every (soc, action) pair");
      }
    }
  }
  return std::make_shared<TabularQ>(std::move(grid), std::move(table));
}

// Policy ---------------------------------------------------------------------

Action argmin_action(const std::array<double, 3>& q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] < q[best]) best = a;
  }
  return static_cast<Action>(best);
}

Policy::Policy(Timestamp start, Seconds step, std::vector<QStage> stages)
    : start_(start), step_(step), stages_(std::move(stages)) {
  if (stages_.empty()) throw Error(ErrorCode::validation, "policy needs at least one stage");
}

const QStage& Policy::stage(int n) const {
  if (n < 1 || n > horizon()) {
    throw Error(ErrorCode::out_of_range_stage,
                "stage " + std::to_string(n) + " outside 1.." + std::to_string(horizon()));
  }
  return stages_[static_cast<std::size_t>(n - 1)];
}

double Policy::q_value(int n, double soc, Action u) const { return stage(n).q->value(soc, u); }

double Policy::min_q(int n, double soc) const {
  const auto& q = *stage(n).q;
  return std::min({q.value(soc, Action::delay), q.value(soc, Action::charge_min),
                   q.value(soc, Action::charge_full)});
}

Action Policy::greedy_action(int n, double soc) const {
  const auto& q = *stage(n).q;
  return argmin_action({q.value(soc, Action::delay), q.value(soc, Action::charge_min),
                        q.value(soc, Action::charge_full)});
}

int Policy::stage_at(Timestamp t) const {
  if (t < start_) {
    throw Error(ErrorCode::out_of_range_stage,
                format_timestamp(t) + " precedes the policy start " + format_timestamp(start_));
  }
  const auto n = static_cast<int>((t - start_) / step_) + 1;
  return std::min(n, horizon());
}

// Fitted Q-iteration ---------------------------------------------------------

Policy fit_policy(const FqiConfig& config, const PlanningModel& model, const TapModel& tap_model,
                  const QRegressor& regressor) {
  config.validate();
  if (model.horizon_steps() != config.horizon_steps || model.step_duration() != config.step) {
    throw Error(ErrorCode::validation, "planning model horizon/step differ from the FQI config");
  }
  if (tap_model.step() != config.step) {
    throw Error(ErrorCode::validation, "tap model step must equal the FQI step");
  }
  const auto grid = config.soc_grid();
  const auto horizon = config.horizon_steps;
  const auto samples = static_cast<std::size_t>(config.samples_per_point);

  std::vector<QStage> stages(static_cast<std::size_t>(horizon));
  std::vector<std::size_t> value_of;  // support index -> distinct value index
  std::vector<double> values;
  std::vector<int> counts;
  for (int n = horizon; n >= 1; --n) {
    const QFunction* next = n < horizon ? stages[static_cast<std::size_t>(n)].q.get() : nullptr;
    const Timestamp t = model.stage_time(n);

    // Draws are uniform over the support; equal volumes share one model call.
    const auto support = tap_model.support(t);
    values.assign(support.begin(), support.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    value_of.resize(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      value_of[k] = static_cast<std::size_t>(
          std::lower_bound(values.begin(), values.end(), support[k]) - values.begin());
    }

    QStage& stage = stages[static_cast<std::size_t>(n - 1)];
    stage.index = n;
    stage.training.reserve(grid.size() * kActions.size());
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(n)}));
    for (double x : grid) {
      for (Action u : kActions) {
        counts.assign(values.size(), 0);
        for (std::size_t s = 0; s < samples; ++s) ++counts[value_of[rng.index(support.size())]];
        double sum = 0.0;
        for (std::size_t v = 0; v < values.size(); ++v) {
          if (counts[v] == 0) continue;
          const auto o = model.step(n, x, u, values[v]);
          double future = 0.0;
          if (next) {
            future = std::min({next->value(o.next_soc, Action::delay),
                               next->value(o.next_soc, Action::charge_min),
                               next->value(o.next_soc, Action::charge_full)});
          }
          sum += static_cast<double>(counts[v]) * (o.cost_kwh + future);
        }
        stage.training.push_back({x, u, sum / static_cast<double>(samples)});
      }
    }
    stage.q = regressor.fit(stage.training,
                            derive_seed(config.seed, {static_cast<std::uint64_t>(n), ~0ULL}));
  }
  return Policy(model.start(), config.step, std::move(stages));
}

Policy fit_policy(const FqiConfig& config, Timestamp start_time, const TapModel& tap_model,
                  const LossModel& loss_model, const ForecastSeries& pv_forecast,
                  const BufferParams& params, double feed_temperature) {
  const PlanningModel model(params, feed_temperature, loss_model, pv_forecast, start_time,
                            config.step, config.horizon_steps);
  return fit_policy(config, model, tap_model, ExtraTreesQRegressor(config.trees));
}

double evaluate_policy(const DecisionRule& rule, const PlanningModel& model,
                       const TapModel& tap_model, double start_soc, int n_rollouts,
                       std::uint64_t seed) {
  if (n_rollouts < 1) throw Error(ErrorCode::invalid_argument, "n_rollouts must be >= 1");
  double total = 0.0;
  for (int r = 0; r < n_rollouts; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    double soc = start_soc;
    double cost = 0.0;
    for (int n = 1; n <= model.horizon_steps(); ++n) {
      const Action u = rule(n, soc);
      const double v = tap_model.sample(model.stage_time(n), rng);
      const auto o = model.step(n, soc, u, v);
      cost += o.cost_kwh;
      soc = o.next_soc;
    }
    total += cost;
  }
  return total / static_cast<double>(n_rollouts);
}

double evaluate_policy(const Policy& policy, const PlanningModel& model, const TapModel& tap_model,
                       double start_soc, int n_rollouts, std::uint64_t seed) {
  return evaluate_policy([&](int n, double soc) { return policy.greedy_action(n, soc); }, model,
                         tap_model, start_soc, n_rollouts, seed);
}

// Exact backward induction ---------------------------------------------------

std::size_t DpSolution::nearest(double soc) const {
  std::size_t best = 0;
  double best_d = std::abs(grid[0] - soc);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = std::abs(grid[i] - soc);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

DpSolution dp_oracle(const DiscreteInstance& instance) {
  if (instance.grid.empty() || instance.horizon < 1) {
    throw Error(ErrorCode::invalid_argument, "DP instance needs a grid and a horizon");
  }
  DpSolution sol;
  sol.grid = instance.grid;
  const auto n_grid = instance.grid.size();
  const auto horizon = static_cast<std::size_t>(instance.horizon);
  sol.q.assign(horizon, std::vector<std::array<double, 3>>(n_grid));
  sol.value.assign(horizon, std::vector<double>(n_grid, 0.0));
  sol.policy.assign(horizon, std::vector<Action>(n_grid, Action::delay));

  std::vector<double> future(n_grid, 0.0);
  for (int n = instance.horizon; n >= 1; --n) {
    const auto k = static_cast<std::size_t>(n - 1);
    const auto outcomes = instance.outcomes(n);
    for (std::size_t i = 0; i < n_grid; ++i) {
      std::array<double, 3> q{};
      for (Action u : kActions) {
        double expected = 0.0;
        for (const auto& [w, p] : outcomes) {
          const auto [next, cost] = instance.step(n, instance.grid[i], u, w);
          expected += p * (cost + future[sol.nearest(next)]);
        }
        q[static_cast<std::size_t>(u)] = expected;
      }
      sol.q[k][i] = q;
      sol.policy[k][i] = argmin_action(q);
      sol.value[k][i] = q[static_cast<std::size_t>(sol.policy[k][i])];
    }
    future = sol.value[k];
  }
  return sol;
}

DiscreteInstance make_instance(const PlanningModel& model, const TapModel& tap_model,
                               std::vector<double> grid) {
  DiscreteInstance inst;
  inst.grid = std::move(grid);
  inst.horizon = model.horizon_steps();
  inst.outcomes = [&model, &tap_model](int n) {
    const auto support = tap_model.support(model.stage_time(n));
    std::vector<double> values(support.begin(), support.end());
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < values.size();) {
      std::size_t j = i;
      while (j < values.size() && values[j] == values[i]) ++j;
      out.emplace_back(values[i], static_cast<double>(j - i) / static_cast<double>(values.size()));
      i = j;
    }
    return out;
  };
  inst.step = [&model](int n, double soc, Action u, double w) {
    const auto o = model.step(n, soc, u, w);
    return std::make_pair(o.next_soc, o.cost_kwh);
  };
  return inst;
}

}  // namespace dhw
