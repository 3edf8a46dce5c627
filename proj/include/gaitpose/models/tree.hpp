#pragma once

// CART (Gini for classes, variance for regression), bagged forests and
// RUSBoost: boosting where every round trains on a class-balanced random
// under-sample but is scored and reweighted on the full training set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaitpose/error.hpp"
#include "gaitpose/models/dataset.hpp"
#include "gaitpose/rng.hpp"

namespace gaitpose {

struct TreeConfig {
  int max_depth = 8;
  int min_leaf = 1;
  /// Features tried per split; 0 means all.
  int max_features = 0;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Leaf payload: class distribution (classification) or {mean} (regression).
  std::vector<double> value;
};

struct TreeModel {
  Task task = Task::Regression;
  int n_classes = 0;
  int max_depth = 0;
  std::vector<TreeNode> nodes;

  const TreeNode& leaf(const Eigen::VectorXd& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)];
  }

  double predict_value(const Eigen::VectorXd& x) const { return leaf(x).value[0]; }

  /// Majority class; ties go to the smaller class index.
  int predict_class(const Eigen::VectorXd& x) const {
    const auto& v = leaf(x).value;
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  std::vector<double> class_proba(const Eigen::VectorXd& x) const { return leaf(x).value; }

  int depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (nodes[i].feature >= 0) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const double> w, Task task,
              int n_classes, const TreeConfig& cfg)
      : X_(X), y_(y), w_(w), task_(task), k_(n_classes), cfg_(cfg), rng_(cfg.seed) {}

  TreeModel build(std::vector<std::size_t> idx) {
    TreeModel t;
    t.task = task_;
    t.n_classes = k_;
    t.max_depth = cfg_.max_depth;
    nodes_.clear();
    grow(idx, 0);
    t.nodes = std::move(nodes_);
    return t;
  }

 private:
  std::vector<double> leaf_value(const std::vector<std::size_t>& idx) const {
    if (task_ == Task::Classification) {
      std::vector<double> dist(static_cast<std::size_t>(k_), 0.0);
      double total = 0.0;
      for (auto i : idx) {
        dist[static_cast<std::size_t>(y_(static_cast<Eigen::Index>(i)))] += w_[i];
        total += w_[i];
      }
      if (total > 0.0) {
        for (auto& v : dist) v /= total;
      }
      return dist;
    }
    double s = 0.0, tw = 0.0;
    for (auto i : idx) {
      s += w_[i] * y_(static_cast<Eigen::Index>(i));
      tw += w_[i];
    }
    return {tw > 0.0 ? s / tw : 0.0};
  }

  /// Weighted impurity times node weight (Gini * W or SSE).
  double impurity(const std::vector<double>& stats, double tw) const {
    if (tw <= 0.0) return 0.0;
    if (task_ == Task::Classification) {
      double sq = 0.0;
      for (double c : stats) sq += c * c;
      return tw - sq / tw;
    }
    return stats[1] - stats[0] * stats[0] / tw;  // sum w y^2 - (sum w y)^2 / W
  }

  void accumulate(std::vector<double>& stats, std::size_t i, double sign) const {
    const double wi = sign * w_[i];
    if (task_ == Task::Classification) {
      stats[static_cast<std::size_t>(y_(static_cast<Eigen::Index>(i)))] += wi;
    } else {
      const double yi = y_(static_cast<Eigen::Index>(i));
      stats[0] += wi * yi;
      stats[1] += wi * yi * yi;
    }
  }

  int grow(std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(idx)});

    const std::size_t n = idx.size();
    const std::size_t stat_size = task_ == Task::Classification ? static_cast<std::size_t>(k_) : 2;
    std::vector<double> total(stat_size, 0.0);
    double tw = 0.0;
    for (auto i : idx) {
      accumulate(total, i, 1.0);
      tw += w_[i];
    }
    const double parent = impurity(total, tw);
    if (depth >= cfg_.max_depth || n < static_cast<std::size_t>(2 * std::max(1, cfg_.min_leaf)) ||
        parent <= 1e-12 * std::max(1.0, tw)) {
      return id;
    }

    std::vector<int> features(static_cast<std::size_t>(X_.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (cfg_.max_features > 0 && cfg_.max_features < X_.cols()) {
      rng_.shuffle(features);
      features.resize(static_cast<std::size_t>(cfg_.max_features));
      std::sort(features.begin(), features.end());
    }

    double best_gain = 1e-12 * std::max(1.0, tw);
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = idx;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, cfg_.min_leaf));
    for (int f : features) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return X_(static_cast<Eigen::Index>(a), f) < X_(static_cast<Eigen::Index>(b), f);
      });
      std::vector<double> left(stat_size, 0.0);
      double lw = 0.0;
      for (std::size_t r = 0; r + 1 < n; ++r) {
        accumulate(left, sorted[r], 1.0);
        lw += w_[sorted[r]];
        const double xv = X_(static_cast<Eigen::Index>(sorted[r]), f);
        const double xn = X_(static_cast<Eigen::Index>(sorted[r + 1]), f);
        if (!(xv < xn)) continue;
        if (r + 1 < min_leaf || n - r - 1 < min_leaf) continue;
        std::vector<double> right(stat_size);
        for (std::size_t c = 0; c < stat_size; ++c) right[c] = total[c] - left[c];
        const double gain = parent - impurity(left, lw) - impurity(right, tw - lw);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = xv;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) {
      (X_(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? li : ri).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(li, depth + 1);
    const int r = grow(ri, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  std::span<const double> w_;
  Task task_;
  int k_;
  TreeConfig cfg_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

inline int class_count(const Dataset& ds) {
  if (ds.task != Task::Classification) return 0;
  if (!ds.classes.empty()) return ds.n_classes();
  return ds.rows() ? static_cast<int>(ds.y.maxCoeff()) + 1 : 0;
}

}  // namespace detail

/// Exhaustive CART. Thresholds are observed feature values (split test
/// x <= threshold), so any strictly increasing transform of a feature yields
/// the same partitions. Ties keep the earlier feature and smaller threshold.
inline TreeModel fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, int n_classes,
                          const TreeConfig& cfg, std::span<const double> weights = {},
                          const std::vector<std::size_t>* rows = nullptr) {
  std::vector<double> unit;
  if (weights.empty()) {
    unit.assign(static_cast<std::size_t>(X.rows()), 1.0);
    weights = unit;
  }
  std::vector<std::size_t> idx = rows ? *rows : iota_indices(static_cast<std::size_t>(X.rows()));
  if (idx.empty()) throw Error(ErrorCode::TooFewSamples, "tree needs at least one sample");
  detail::TreeBuilder builder(X, y, weights, task, n_classes, cfg);
  return builder.build(std::move(idx));
}

inline TreeModel fit_tree(const Dataset& ds, const TreeConfig& cfg) {
  return fit_tree(ds.X, ds.y, ds.task, detail::class_count(ds), cfg);
}

// ---------------------------------------------------------------------------

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 1000;
  int min_leaf = 5;
  /// 0 selects floor(sqrt(d)).
  int max_features = 0;
  std::uint64_t seed = 0;
};

struct ForestModel {
  Task task = Task::Regression;
  int n_classes = 0;
  std::vector<TreeModel> trees;

  double predict_value(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict_value(x);
    return s / static_cast<double>(trees.size());
  }

  std::vector<double> class_proba(const Eigen::VectorXd& x) const {
    std::vector<double> p(static_cast<std::size_t>(n_classes), 0.0);
    for (const auto& t : trees) p[static_cast<std::size_t>(t.predict_class(x))] += 1.0;
    for (auto& v : p) v /= static_cast<double>(trees.size());
    return p;
  }

  int predict_class(const Eigen::VectorXd& x) const {
    const auto p = class_proba(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

/// Bagged CART: bootstrap rows per tree, random feature subset per split.
inline ForestModel fit_forest(const Dataset& ds, const ForestConfig& cfg) {
  if (cfg.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  ForestModel f;
  f.task = ds.task;
  f.n_classes = detail::class_count(ds);
  const auto n = static_cast<std::size_t>(ds.rows());
  const int mtry = cfg.max_features > 0
                       ? cfg.max_features
                       : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(ds.cols())))));
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    TreeConfig tc{cfg.max_depth, cfg.min_leaf, mtry, rng.next_u64()};
    f.trees.push_back(fit_tree(ds.X, ds.y, ds.task, f.n_classes, tc, {}, &rows));
  }
  return f;
}

// ---------------------------------------------------------------------------

struct RusBoostConfig {
  int rounds = 50;
  int max_depth = 3;
  int min_leaf = 1;
  /// Rounds whose weighted error reaches 0.5 are redrawn, at most this many times in a row.
  int max_retries = 10;
  std::uint64_t seed = 0;
};

struct RusBoostModel {
  int n_classes = 0;
  std::vector<TreeModel> learners;
  std::vector<double> alphas;  // log(1 / beta_t)

  /// Normalised weighted votes per class.
  std::vector<double> class_scores(const Eigen::VectorXd& x) const {
    std::vector<double> s(static_cast<std::size_t>(n_classes), 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < learners.size(); ++t) {
      s[static_cast<std::size_t>(learners[t].predict_class(x))] += alphas[t];
      total += alphas[t];
    }
    if (total > 0.0) {
      for (auto& v : s) v /= total;
    }
    return s;
  }

  int predict_class(const Eigen::VectorXd& x) const {
    const auto s = class_scores(x);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }
};

/// Multiplies the weights of correctly classified samples by
/// beta = eps / (1 - eps) and renormalises. Returns beta.
inline double rusboost_reweight(std::vector<double>& weights, const std::vector<bool>& correct, double eps) {
  eps = std::max(eps, 1e-10);
  const double beta = eps / (1.0 - eps);
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (correct[i]) weights[i] *= beta;
    total += weights[i];
  }
  for (auto& w : weights) w /= total;
  return beta;
}

/// Per-class indices, each class cut down to the size of the smallest one
/// (sampling without replacement).
inline std::vector<std::size_t> random_undersample(const Eigen::VectorXd& y, int n_classes, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    by_class[static_cast<std::size_t>(y(i))].push_back(static_cast<std::size_t>(i));
  }
  std::size_t minority = std::numeric_limits<std::size_t>::max();
  for (const auto& c : by_class) {
    if (!c.empty()) minority = std::min(minority, c.size());
  }
  std::vector<std::size_t> out;
  for (auto& c : by_class) {
    rng.shuffle(c);
    out.insert(out.end(), c.begin(), c.begin() + static_cast<long>(std::min(minority, c.size())));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline RusBoostModel fit_rusboost(const Dataset& ds, const RusBoostConfig& cfg) {
  if (ds.task != Task::Classification) throw Error(ErrorCode::InvalidArgument, "RUSBoost needs class labels");
  const int k = detail::class_count(ds);
  int present = 0;
  {
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) seen[static_cast<std::size_t>(ds.y(i))] = true;
    present = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  }
  if (present < 2) throw Error(ErrorCode::SingleClass, "training labels contain a single class");

  RusBoostModel model;
  model.n_classes = k;
  const auto n = static_cast<std::size_t>(ds.rows());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  Rng rng(cfg.seed);
  int retries = 0;
  for (int round = 0; round < cfg.rounds;) {
    const auto sample = random_undersample(ds.y, k, rng);
    std::vector<double> sw(n, 0.0);
    double stotal = 0.0;
    for (auto i : sample) stotal += w[i];
    for (auto i : sample) sw[i] = w[i] / stotal;
    TreeConfig tc{cfg.max_depth, cfg.min_leaf, 0, rng.next_u64()};
    TreeModel tree = fit_tree(ds.X, ds.y, Task::Classification, k, tc, sw, &sample);

    std::vector<bool> correct(n);
    double eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = tree.predict_class(ds.X.row(static_cast<Eigen::Index>(i)).transpose()) ==
                   static_cast<int>(ds.y(static_cast<Eigen::Index>(i)));
      if (!correct[i]) eps += w[i];
    }
    if (eps >= 0.5) {
      if (++retries > cfg.max_retries) break;
      continue;
    }
    retries = 0;
    const double beta = rusboost_reweight(w, correct, eps);
    model.learners.push_back(std::move(tree));
    model.alphas.push_back(std::log(1.0 / beta));
    ++round;
  }
  if (model.learners.empty()) {
    throw Error(ErrorCode::NoConvergence, "no boosting round reached weighted error below 0.5");
  }
  return model;
}

}  // namespace gaitpose
