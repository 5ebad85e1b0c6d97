#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace dhw {

/// Row-major regression dataset.
class Dataset {
 public:
  explicit Dataset(std::size_t dimension) : dimension_(dimension) {}

  void add(std::span<const double> x, double y);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return targets_.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dimension_, dimension_};
  }
  double feature(std::size_t i, std::size_t f) const { return features_[i * dimension_ + f]; }
  double target(std::size_t i) const { return targets_[i]; }
  std::span<const double> targets() const { return targets_; }

 private:
  std::size_t dimension_;
  std::vector<double> features_;
  std::vector<double> targets_;
};

struct TreeParams {
  int n_trees = 50;
  int k_splits = 0;  // 0 = input dimensionality
  int n_min = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Binary tree node; `feature < 0` marks a leaf. Samples with
/// x[feature] < threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int count = 0;
};

class Tree {
 public:
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
};

class TrainedEnsemble {
 public:
  TrainedEnsemble(std::size_t dimension, std::vector<Tree> trees);

  /// Mean of the per-tree leaf values; throws dimension_mismatch.
  double predict(std::span<const double> x) const;

  std::size_t dimension() const { return dimension_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::size_t dimension_;
  std::vector<Tree> trees_;
};

/// Candidate scores seen at one node, for split-selection checks.
struct SplitRecord {
  std::vector<double> candidate_scores;
  std::size_t chosen = 0;
};
using SplitObserver = std::function<void(const SplitRecord&)>;

/// Extremely randomized trees: no bootstrap, k random (feature, threshold)
/// candidates per node, best variance reduction wins, first drawn on ties.
/// Tree t draws from its own stream derived from (seed, t).
TrainedEnsemble fit_extra_trees(const Dataset& data, const TreeParams& params,
                                const SplitObserver& observer = {});

}  // namespace dhw
