#include "dhw/extra_trees.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dhw/error.hpp"
#include "dhw/rng.hpp"

namespace dhw {

void Dataset::add(std::span<const double> x, double y) {
  if (x.size() != dimension_) {
    throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(dimension_) +
                                                   " features, got " + std::to_string(x.size()));
  }
  features_.insert(features_.end(), x.begin(), x.end());
  targets_.push_back(y);
}

void TreeParams::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::validation, "n_trees must be >= 1");
  if (k_splits < 0) throw Error(ErrorCode::validation, "k_splits must be >= 1 (or 0 for default)");
  if (n_min < 2) throw Error(ErrorCode::validation, "n_min must be >= 2");
}

double Tree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

TrainedEnsemble::TrainedEnsemble(std::size_t dimension, std::vector<Tree> trees)
    : dimension_(dimension), trees_(std::move(trees)) {}

double TrainedEnsemble::predict(std::span<const double> x) const {
  if (x.size() != dimension_) {
    throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(dimension_) +
                                                   " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<double>& columns, const TreeParams& params,
              std::uint64_t seed, const SplitObserver& observer)
      : data_(data),
        columns_(columns),
        n_min_(static_cast<std::size_t>(params.n_min)),
        k_(params.k_splits > 0 ? static_cast<std::size_t>(params.k_splits) : data.dimension()),
        rng_(seed),
        observer_(observer) {}

  Tree build() {
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    nodes_.reserve(2 * idx.size());
    grow(idx, 0, idx.size());
    return Tree(std::move(nodes_));
  }

 private:
  struct Candidate {
    std::size_t feature;
    double threshold;
    double score;
  };

  int grow(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const std::size_t n = end - begin;

    double sum = 0.0;
    double lo = data_.target(idx[begin]);
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double y = data_.target(idx[i]);
      sum += y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    auto& self = nodes_[static_cast<std::size_t>(id)];
    self.value = sum / static_cast<double>(n);
    self.count = static_cast<int>(n);
    if (n < n_min_ || lo == hi) return id;

    // Features that are not constant in this node, with their ranges. The
    // scratch buffers are free again once the children are grown.
    auto& usable = usable_;
    auto& ranges = ranges_;
    usable.clear();
    ranges.resize(data_.dimension());
    for (std::size_t f = 0; f < data_.dimension(); ++f) {
      const double* col = column(f);
      double a = col[idx[begin]];
      double b = a;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = col[idx[i]];
        a = std::min(a, v);
        b = std::max(b, v);
      }
      ranges[f] = {a, b};
      if (a < b) usable.push_back(f);
    }
    if (usable.empty()) return id;

    // First min(k, m) candidates use distinct features, the rest repeat.
    auto& candidates = candidates_;
    candidates.clear();
    for (std::size_t c = 0; c < k_; ++c) {
      std::size_t feature;
      if (c < usable.size()) {
        const std::size_t j = c + rng_.index(usable.size() - c);
        std::swap(usable[c], usable[j]);
        feature = usable[c];
      } else {
        feature = usable[rng_.index(usable.size())];
      }
      const auto [a, b] = ranges[feature];
      double threshold = rng_.uniform(a, b);
      if (!(threshold > a)) {
        // Only reachable when a and b are adjacent doubles or the draw hit a.
        threshold = a + 0.5 * (b - a);
        if (!(threshold > a)) threshold = b;
      }
      candidates.push_back({feature, threshold, score(idx, begin, end, feature, threshold, sum)});
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
      if (candidates[c].score > candidates[best].score) best = c;
    }
    if (observer_) {
      SplitRecord rec;
      for (const auto& c : candidates) rec.candidate_scores.push_back(c.score);
      rec.chosen = best;
      observer_(rec);
    }

    const auto chosen = candidates[best];
    const double* col = column(chosen.feature);
    const auto mid = std::partition(
        idx.begin() + static_cast<long>(begin), idx.begin() + static_cast<long>(end),
        [&](std::size_t i) { return col[i] < chosen.threshold; });
    const auto split = static_cast<std::size_t>(mid - idx.begin());
    const int left = grow(idx, begin, split);
    const int right = grow(idx, split, end);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(chosen.feature);
    node.threshold = chosen.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  /// Reduction in sum of squared errors, n·Var(parent) − n_l·Var(l) − n_r·Var(r).
  double score(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
               std::size_t feature, double threshold, double total) const {
    const double* col = column(feature);
    const auto y = data_.targets();
    double left_sum = 0.0;
    std::size_t left_n = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (col[idx[i]] < threshold) {
        left_sum += y[idx[i]];
        ++left_n;
      }
    }
    const std::size_t n = end - begin;
    const std::size_t right_n = n - left_n;
    const double right_sum = total - left_sum;
    return left_sum * left_sum / static_cast<double>(left_n) +
           right_sum * right_sum / static_cast<double>(right_n) -
           total * total / static_cast<double>(n);
  }

  const double* column(std::size_t f) const { return columns_.data() + f * data_.size(); }

  const Dataset& data_;
  const std::vector<double>& columns_;  // feature-major copy of the inputs
  std::size_t n_min_;
  std::size_t k_;
  Rng rng_;
  const SplitObserver& observer_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> usable_;
  std::vector<std::pair<double, double>> ranges_;
  std::vector<Candidate> candidates_;
};

}  // namespace

TrainedEnsemble fit_extra_trees(const Dataset& data, const TreeParams& params,
                                const SplitObserver& observer) {
  params.validate();
  if (data.size() == 0) throw Error(ErrorCode::empty_training_set, "no training samples");
  std::vector<double> columns(data.size() * data.dimension());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < data.dimension(); ++f) {
      columns[f * data.size() + i] = data.feature(i, f);
    }
  }
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    TreeBuilder builder(data, columns, params,
                        derive_seed(params.seed, {static_cast<std::uint64_t>(t)}), observer);
    trees.push_back(builder.build());
  }
  return TrainedEnsemble(data.dimension(), std::move(trees));
}

}  // namespace dhw
