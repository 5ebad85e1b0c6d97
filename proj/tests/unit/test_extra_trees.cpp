#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "dhw/error.hpp"
#include "dhw/extra_trees.hpp"
#include "dhw/fqi.hpp"
#include "dhw/rng.hpp"

using namespace dhw;

namespace {

Dataset one_d(const std::function<double(double)>& f, int n, std::uint64_t seed) {
  Dataset d(1);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform();
    const double row[1] = {x};
    d.add(row, f(x));
  }
  return d;
}

double predict1(const TrainedEnsemble& m, double x) {
  const double row[1] = {x};
  return m.predict(row);
}

/// Walks one tree and checks the structural invariants at every node.
void check_tree(const Tree& tree, const Dataset& data) {
  std::vector<std::vector<std::size_t>> members(tree.nodes().size());
  for (std::size_t i = 0; i < data.size(); ++i) members[0].push_back(i);
  for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
    const auto& node = tree.nodes()[id];
    const auto& in = members[id];
    ASSERT_GE(in.size(), 1u) << "node " << id << " holds no sample";
    EXPECT_EQ(static_cast<std::size_t>(node.count), in.size());
    if (node.feature < 0) continue;
    const auto f = static_cast<std::size_t>(node.feature);
    double lo = data.feature(in[0], f), hi = lo;
    for (std::size_t i : in) {
      lo = std::min(lo, data.feature(i, f));
      hi = std::max(hi, data.feature(i, f));
      (data.feature(i, f) < node.threshold ? members[static_cast<std::size_t>(node.left)]
                                           : members[static_cast<std::size_t>(node.right)])
          .push_back(i);
    }
    EXPECT_GT(node.threshold, lo);
    EXPECT_LT(node.threshold, hi);
  }
}

}  // namespace

TEST(ExtraTrees, ConstantTargets) {
  Dataset d(3);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const double x[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    d.add(x, 4.25);
  }
  const auto m = fit_extra_trees(d, TreeParams{});
  for (int i = 0; i < 20; ++i) {
    const double x[3] = {rng.uniform(-5, 5), rng.uniform(), 100.0};
    EXPECT_EQ(m.predict(x), 4.25);
  }
  // Nothing to split on: every tree is a single leaf.
  for (const auto& t : m.trees()) EXPECT_EQ(t.nodes().size(), 1u);
}

TEST(ExtraTrees, SingleSample) {
  Dataset d(2);
  const double x0[2] = {0.3, 0.7};
  d.add(x0, -1.5);
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 5});
  const double x[2] = {10, -10};
  EXPECT_EQ(m.predict(x), -1.5);
}

TEST(ExtraTrees, StepFunctionAwayFromTheStep) {
  const Dataset d = one_d([](double x) { return x > 0.5 ? 1.0 : 0.0; }, 1000, 7);
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 50, .seed = 3});
  Rng rng(99);
  double se = 0;
  int n = 0;
  while (n < 2000) {
    const double x = rng.uniform();
    if (std::abs(x - 0.5) < 0.02) continue;
    const double e = predict1(m, x) - (x > 0.5 ? 1.0 : 0.0);
    se += e * e;
    ++n;
  }
  EXPECT_LT(se / n, 0.01);
}

TEST(ExtraTrees, PredictionsStayInTheTargetRange) {
  Rng rng(5);
  Dataset d(2);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 300; ++i) {
    const double x[2] = {rng.uniform(), rng.normal()};
    const double y = std::sin(6 * x[0]) + 0.3 * x[1];
    lo = std::min(lo, y);
    hi = std::max(hi, y);
    d.add(x, y);
  }
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 20, .n_min = 5, .seed = 8});
  for (int i = 0; i < 500; ++i) {
    const double x[2] = {rng.uniform(-1, 2), rng.normal(0, 3)};
    const double p = m.predict(x);
    EXPECT_GE(p, lo - 1e-12);
    EXPECT_LE(p, hi + 1e-12);
  }
}

TEST(ExtraTrees, StructuralInvariants) {
  Rng rng(6);
  Dataset d(3);
  for (int i = 0; i < 400; ++i) {
    // Repeated feature values exercise the constant-feature path.
    const double x[3] = {std::floor(rng.uniform(0, 5)), rng.uniform(), 1.0};
    d.add(x, x[0] * x[1] + rng.normal(0, 0.1));
  }
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 10, .k_splits = 2, .n_min = 3, .seed = 2});
  for (const auto& t : m.trees()) check_tree(t, d);
}

TEST(ExtraTrees, Errors) {
  Dataset empty(2);
  try {
    fit_extra_trees(empty, TreeParams{});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_training_set);
  }
  Dataset d(2);
  const double three[3] = {1, 2, 3};
  EXPECT_THROW(d.add(three, 1.0), Error);
  const double two[2] = {1, 2};
  d.add(two, 1.0);
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 1});
  try {
    m.predict(three);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
  EXPECT_THROW(fit_extra_trees(d, TreeParams{.n_trees = 0}), Error);
  EXPECT_THROW(fit_extra_trees(d, TreeParams{.n_min = 1}), Error);
}

TEST(ExtraTrees, DeterministicUnderSeed) {
  const Dataset d = one_d([](double x) { return x * x; }, 200, 4);
  const auto a = fit_extra_trees(d, TreeParams{.n_trees = 10, .seed = 42});
  const auto b = fit_extra_trees(d, TreeParams{.n_trees = 10, .seed = 42});
  const auto c = fit_extra_trees(d, TreeParams{.n_trees = 10, .seed = 43});
  bool differs = false;
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    ASSERT_EQ(predict1(a, x), predict1(b, x));
    differs |= predict1(a, x) != predict1(c, x);
  }
  EXPECT_TRUE(differs);
}

TEST(ExtraTrees, ChosenSplitBeatsEveryCandidate) {
  Rng rng(10);
  Dataset d(4);
  for (int i = 0; i < 300; ++i) {
    const double x[4] = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    d.add(x, x[0] + 2 * x[2] * x[3] + rng.normal(0, 0.05));
  }
  int nodes = 0;
  const SplitObserver observer = [&](const SplitRecord& r) {
    ++nodes;
    ASSERT_LT(r.chosen, r.candidate_scores.size());
    for (std::size_t c = 0; c < r.candidate_scores.size(); ++c) {
      EXPECT_GE(r.candidate_scores[r.chosen], r.candidate_scores[c]);
      // Ties go to the first drawn candidate.
      if (c < r.chosen) EXPECT_LT(r.candidate_scores[c], r.candidate_scores[r.chosen]);
    }
  };
  fit_extra_trees(d, TreeParams{.n_trees = 3, .seed = 1}, observer);
  EXPECT_GT(nodes, 100);
}

TEST(ExtraTrees, MoreTreesReduceErrorOnSmoothTargets) {
  const auto f = [](double x) { return std::sin(2 * M_PI * x); };
  double rmse_1 = 0, rmse_100 = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = one_d(f, 200, 100 + seed);
    for (int trees : {1, 100}) {
      const auto m = fit_extra_trees(d, TreeParams{.n_trees = trees, .seed = seed});
      double se = 0;
      for (int i = 0; i < 500; ++i) {
        const double x = (i + 0.5) / 500;
        se += std::pow(predict1(m, x) - f(x), 2);
      }
      (trees == 1 ? rmse_1 : rmse_100) += std::sqrt(se / 500) / 5;
    }
  }
  EXPECT_LT(rmse_100, rmse_1);
}

TEST(CompiledEnsemble, AgreesWithTreeWalk) {
  Rng rng(21);
  Dataset d(4);
  for (int i = 0; i < 300; ++i) {
    const double s = rng.uniform(-0.2, 1.0);
    const Action u = kActions[rng.index(3)];
    const auto x = encode_q_input(s, u);
    d.add(x, s * s + to_int(u) + rng.normal(0, 0.1));
  }
  const auto m = fit_extra_trees(d, TreeParams{.n_trees = 30, .seed = 5});
  const CompiledEnsembleQ q(m);
  for (int i = 0; i <= 2000; ++i) {
    const double s = -0.5 + 2.0 * i / 2000;
    for (Action u : kActions) {
      const auto x = encode_q_input(s, u);
      EXPECT_NEAR(q.value(s, u), m.predict(x), 1e-9 * (1 + std::abs(m.predict(x))));
    }
  }
}
