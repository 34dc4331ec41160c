#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/models/dataset.hpp"

namespace buzzdet::models {

struct ForestConfig {
  std::size_t n_trees = 2000;
  std::uint64_t seed = 0;
  bool balanced_subsample = true;  // per-tree class weights from the bootstrap sample
  std::size_t max_features = 0;    // 0 means floor(sqrt(#features))
  std::size_t threads = 1;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // rows with x[feature] <= threshold go left
  std::uint32_t left = 0, right = 0;
  double prob = 0.0;          // weighted fraction of the positive class

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict_proba(std::span<const double> row) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf())
      i = row[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].prob;
  }
  std::size_t depth() const {
    std::vector<std::pair<std::uint32_t, std::size_t>> st{{0, 1}};
    std::size_t d = 0;
    while (!st.empty()) {
      auto [i, k] = st.back();
      st.pop_back();
      d = std::max(d, k);
      if (!nodes[i].is_leaf()) {
        st.push_back({nodes[i].left, k + 1});
        st.push_back({nodes[i].right, k + 1});
      }
    }
    return d;
  }
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestModel {
  std::size_t n_features = 0;
  bool balanced_subsample = true;
  std::uint64_t seed = 0;
  std::vector<DecisionTree> trees;

  /// Mean of the per-tree weighted leaf distributions.
  double predict_proba(std::span<const double> row) const {
    if (row.size() != n_features) throw ShapeError("ForestModel: row width does not match model");
    double s = 0.0;
    for (const auto& t : trees) s += t.predict_proba(row);
    return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
  }
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double gini(double w0, double w1) {
  const double w = w0 + w1;
  if (w <= 0.0) return 0.0;
  const double p0 = w0 / w, p1 = w1 / w;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeGrower {
public:
  TreeGrower(const Dataset& d, std::size_t mtry, std::uint64_t seed) : d_(d), mtry_(mtry), rng_(seed) {}

  DecisionTree grow(bool balanced) {
    // Bootstrap: n draws with replacement, stored as per-row multiplicities.
    std::uniform_int_distribution<std::size_t> pick(0, d_.rows - 1);
    std::vector<std::uint32_t> count(d_.rows, 0);
    for (std::size_t k = 0; k < d_.rows; ++k) ++count[pick(rng_)];
    double n_boot[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < d_.rows; ++i) n_boot[d_.y[i]] += count[i];
    double cw[2] = {1.0, 1.0};
    if (balanced) {
      const double n = n_boot[0] + n_boot[1];
      for (int c = 0; c < 2; ++c) cw[c] = n_boot[c] > 0.0 ? n / (2.0 * n_boot[c]) : 0.0;
    }
    weight_.assign(d_.rows, 0.0);
    std::vector<std::uint32_t> idx;
    for (std::size_t i = 0; i < d_.rows; ++i)
      if (count[i] > 0) {
        weight_[i] = count[i] * cw[d_.y[i]];
        idx.push_back(static_cast<std::uint32_t>(i));
      }

    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Job {
      std::uint32_t node;
      std::size_t begin, end;
    };
    std::vector<Job> stack{{0, 0, idx.size()}};
    features_.resize(d_.cols);
    std::iota(features_.begin(), features_.end(), 0u);
    while (!stack.empty()) {
      const Job job = stack.back();
      stack.pop_back();
      std::span<std::uint32_t> rows(idx.data() + job.begin, job.end - job.begin);
      double w[2] = {0.0, 0.0};
      for (auto r : rows) w[d_.y[r]] += weight_[r];
      tree.nodes[job.node].prob = (w[0] + w[1]) > 0.0 ? w[1] / (w[0] + w[1]) : 0.0;
      if (w[0] == 0.0 || w[1] == 0.0 || rows.size() < 2) continue;

      const auto best = find_split(rows, w);
      if (best.feature < 0) continue;
      auto mid = std::stable_partition(rows.begin(), rows.end(), [&](std::uint32_t r) {
        return d_.x[r * d_.cols + static_cast<std::size_t>(best.feature)] <= best.threshold;
      });
      const std::size_t n_left = static_cast<std::size_t>(mid - rows.begin());
      const auto left = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[job.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, job.begin + n_left, job.end});
      stack.push_back({left, job.begin, job.begin + n_left});
    }
    return tree;
  }

private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  // Greedy weighted-Gini split over randomly drawn candidate features; keeps
  // drawing past constant features until mtry informative ones were examined.
  Split find_split(std::span<const std::uint32_t> rows, const double* w_total) {
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    std::size_t examined = 0;
    for (std::size_t k = 0; k < features_.size() && examined < mtry_; ++k) {
      std::uniform_int_distribution<std::size_t> draw(k, features_.size() - 1);
      std::swap(features_[k], features_[draw(rng_)]);
      const std::size_t f = features_[k];
      sorted_.clear();
      for (auto r : rows) sorted_.emplace_back(d_.x[r * d_.cols + f], r);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;
      ++examined;
      double left[2] = {0.0, 0.0};
      for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
        const auto r = sorted_[i].second;
        left[d_.y[r]] += weight_[r];
        if (sorted_[i].first == sorted_[i + 1].first) continue;
        const double right0 = w_total[0] - left[0], right1 = w_total[1] - left[1];
        const double imp = (left[0] + left[1]) * gini(left[0], left[1]) + (right0 + right1) * gini(right0, right1);
        if (imp < best.impurity) {
          best.impurity = imp;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = sorted_[i].first;
        }
      }
    }
    return best;
  }

  const Dataset& d_;
  std::size_t mtry_;
  std::mt19937_64 rng_;
  std::vector<double> weight_;
  std::vector<std::uint32_t> features_;
  std::vector<std::pair<double, std::uint32_t>> sorted_;
};

}  // namespace detail

/// Random forest of fully grown trees. Each tree sees a bootstrap sample; in
/// balanced-subsample mode class c gets weight n_boot / (2 n_boot_c) computed
/// on that tree's own bootstrap.
inline ForestModel rf_fit(const Dataset& data, const ForestConfig& cfg = {}) {
  if (data.rows == 0) throw ValidationError("rf_fit: empty training set");
  data.require_both_classes("rf_fit");
  data.require_finite("rf_fit");
  if (cfg.n_trees == 0) throw ConfigError("rf_fit: n_trees must be >= 1");
  const std::size_t mtry =
      cfg.max_features > 0 ? std::min(cfg.max_features, data.cols)
                           : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(data.cols))));
  ForestModel m;
  m.n_features = data.cols;
  m.balanced_subsample = cfg.balanced_subsample;
  m.seed = cfg.seed;
  m.trees.resize(cfg.n_trees);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      detail::TreeGrower g(data, mtry, detail::splitmix64(cfg.seed * 0x100000001b3ull + t));
      m.trees[t] = g.grow(cfg.balanced_subsample);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.n_trees);
  if (threads == 1) {
    work(0, cfg.n_trees);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (cfg.n_trees + threads - 1) / threads;
    for (std::size_t k = 0; k < threads; ++k) {
      const std::size_t b = k * chunk, e = std::min(cfg.n_trees, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return m;
}

}  // namespace buzzdet::models
