// Copyright 2026 The wineqc Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wineqc/forest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "wineqc/data.hpp"
#include "wineqc/kernels.hpp"

namespace wineqc {

std::size_t MaxFeatures::resolve(std::size_t d) const {
  if (d == 0) return 0;
  double m = 0.0;
  switch (kind) {
    case Kind::kSqrt: m = std::floor(std::sqrt(static_cast<double>(d))); break;
    case Kind::kLog2: m = std::floor(std::log2(static_cast<double>(d))); break;
    case Kind::kFraction: m = std::floor(fraction * static_cast<double>(d)); break;
    case Kind::kAll: m = static_cast<double>(d); break;
  }
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, d);
}

void TreeConfig::validate() const {
  if (min_samples_split < 2) throw ConfigError("tree: min_samples_split must be at least 2");
  if (min_samples_leaf < 1) throw ConfigError("tree: min_samples_leaf must be at least 1");
  if (max_features.kind == MaxFeatures::Kind::kFraction &&
      !(max_features.fraction > 0.0 && max_features.fraction <= 1.0)) {
    throw ConfigError("tree: max_features fraction must lie in (0, 1]");
  }
}

double impurity(std::span<const double> w, Criterion criterion) {
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) return 0.0;
  double out = 0.0;
  if (criterion == Criterion::kGini) {
    out = 1.0;
    for (double v : w) out -= (v / total) * (v / total);
  } else {
    for (double v : w) {
      if (v > 0.0) out -= (v / total) * std::log2(v / total);
    }
  }
  return out;
}

namespace {

// Total weight times impurity; the quantity split decreases are measured in.
double weighted_impurity(std::span<const double> w, double total, Criterion criterion) {
  if (total <= 0.0) return 0.0;
  if (criterion == Criterion::kGini) {
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return total - sq / total;
  }
  double out = 0.0;
  for (double v : w) {
    if (v > 0.0) out -= v * std::log2(v / total);
  }
  return out;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = -1.0;
};

class CartBuilder {
 public:
  CartBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w,
              std::size_t num_classes, const TreeConfig& config)
      : x_(x), y_(y), w_(w), c_(num_classes), config_(config), rng_(config.seed),
        m_(config.max_features.resolve(x.cols())) {}

  DecisionTree build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    tree_.num_classes = c_;
    tree_.importance.assign(x_.cols(), 0.0);
    tree_.nodes.emplace_back();

    struct Task {
      int node;
      std::size_t begin, end, depth;
    };
    std::vector<Task> stack{{0, 0, rows_.size(), 0}};
    double root_weight = 0.0;
    std::vector<double> class_w(c_);
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      std::fill(class_w.begin(), class_w.end(), 0.0);
      for (std::size_t i = task.begin; i < task.end; ++i) {
        class_w[static_cast<std::size_t>(y_[rows_[i]])] += w_[rows_[i]];
      }
      const double total = std::accumulate(class_w.begin(), class_w.end(), 0.0);
      if (task.node == 0) root_weight = total;
      const std::size_t count = task.end - task.begin;
      const double node_impurity = weighted_impurity(class_w, total, config_.criterion);

      Split split;
      const bool can_split = (config_.max_depth == 0 || task.depth < config_.max_depth) &&
                             count >= config_.min_samples_split &&
                             count >= 2 * config_.min_samples_leaf &&
                             node_impurity > 1e-12 * total;
      if (can_split) split = find_split(task.begin, task.end, class_w, total, node_impurity);

      if (split.feature < 0) {
        TreeNode& leaf = tree_.nodes[static_cast<std::size_t>(task.node)];
        leaf.weight = total;
        leaf.posterior.resize(c_);
        for (std::size_t k = 0; k < c_; ++k) leaf.posterior[k] = class_w[k] / total;
        continue;
      }

      auto mid = std::partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(task.begin),
          rows_.begin() + static_cast<std::ptrdiff_t>(task.end), [&](std::uint32_t r) {
            return x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold;
          });
      const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
      tree_.importance[static_cast<std::size_t>(split.feature)] += split.decrease;

      const int left = static_cast<int>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      TreeNode& node = tree_.nodes[static_cast<std::size_t>(task.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      node.weight = total;
      stack.push_back({left + 1, split_at, task.end, task.depth + 1});
      stack.push_back({left, task.begin, split_at, task.depth + 1});
    }
    if (root_weight > 0.0) {
      for (double& v : tree_.importance) v /= root_weight;
    }
    return std::move(tree_);
  }

 private:
  Split find_split(std::size_t begin, std::size_t end, std::span<const double> class_w,
                   double total, double node_impurity) {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng_);

    Split best;
    std::size_t informative = 0;
    std::vector<double> left_w(c_);
    std::vector<double> right_w(c_);
    for (std::size_t f : order) {
      if (informative >= m_ && best.feature >= 0) break;
      sorted_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t r = rows_[i];
        sorted_.emplace_back(x_(r, f), r);
      }
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;
      ++informative;

      std::fill(left_w.begin(), left_w.end(), 0.0);
      double left_total = 0.0;
      const std::size_t count = sorted_.size();
      for (std::size_t i = 0; i + 1 < count; ++i) {
        const std::uint32_t r = sorted_[i].second;
        const double wr = w_[r];
        left_w[static_cast<std::size_t>(y_[r])] += wr;
        left_total += wr;
        if (sorted_[i].first == sorted_[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        if (n_left < config_.min_samples_leaf || count - n_left < config_.min_samples_leaf) {
          continue;
        }
        for (std::size_t k = 0; k < c_; ++k) right_w[k] = class_w[k] - left_w[k];
        const double right_total = total - left_total;
        const double decrease = node_impurity -
                                weighted_impurity(left_w, left_total, config_.criterion) -
                                weighted_impurity(right_w, right_total, config_.criterion);
        double threshold = 0.5 * (sorted_[i].first + sorted_[i + 1].first);
        if (threshold >= sorted_[i + 1].first) threshold = sorted_[i].first;
        const int fi = static_cast<int>(f);
        if (decrease > best.decrease ||
            (decrease == best.decrease &&
             (fi < best.feature || (fi == best.feature && threshold < best.threshold)))) {
          best = {fi, threshold, decrease};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  std::size_t c_;
  const TreeConfig& config_;
  Rng rng_;
  std::size_t m_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::pair<double, std::uint32_t>> sorted_;
  DecisionTree tree_;
};

void check_fit_inputs(const Matrix& x, std::span<const int> y, std::span<const double> w) {
  if (x.rows() == 0) throw ConfigError("fit: empty training set");
  if (y.size() != x.rows() || w.size() != x.rows()) {
    throw ConfigError("fit: X, y and weights differ in length");
  }
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("fit: weights must be positive");
  }
}

std::vector<int> dense_labels(std::span<const int> y, std::span<const int> vocab) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), y[i]);
    out[i] = static_cast<int>(it - vocab.begin());
  }
  return out;
}

}  // namespace

const std::vector<double>& DecisionTree::posterior(std::span<const double> x) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
  }
  return nodes[node].posterior;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth_of(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

DecisionTree fit_cart_rows(const Matrix& x, std::span<const int> y_index,
                           std::span<const double> weights, std::size_t num_classes,
                           std::vector<std::uint32_t> rows, const TreeConfig& config) {
  config.validate();
  check_fit_inputs(x, y_index, weights);
  if (rows.empty()) throw ConfigError("fit_cart: no rows to fit");
  for (int c : y_index) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
      throw ConfigError("fit_cart: class index out of range");
    }
  }
  return CartBuilder(x, y_index, weights, num_classes, config).build(std::move(rows));
}

DecisionTree fit_cart(const Matrix& x, std::span<const int> y_index,
                      std::span<const double> weights, std::size_t num_classes,
                      const TreeConfig& config) {
  std::vector<std::uint32_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0U);
  return fit_cart_rows(x, y_index, weights, num_classes, std::move(rows), config);
}

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y,
                              std::span<const double> weights, const ForestConfig& config) {
  if (config.num_trees < 1) throw ConfigError("random forest: need at least one tree");
  config.tree.validate();
  check_fit_inputs(x, y, weights);

  ForestModel model;
  model.config = config;
  model.class_vocab = vocabulary_of(y);
  model.num_features = x.cols();
  model.subspace_size = config.tree.max_features.resolve(x.cols());
  const std::vector<int> y_index = dense_labels(y, model.class_vocab);
  const std::size_t n = x.rows();

  model.trees.resize(config.num_trees);
  if (config.bootstrap) model.bootstrap_counts.resize(config.num_trees);
  kernels::for_each_index(config.num_trees, config.policy, [&](std::size_t t) {
    TreeConfig tree_config = config.tree;
    tree_config.seed = derive_seed(config.seed, t, 1);
    std::vector<std::uint32_t> rows(n);
    if (config.bootstrap) {
      Rng rng(derive_seed(config.seed, t, 2));
      std::vector<std::uint16_t> counts(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = uniform_index(rng, n);
        rows[i] = static_cast<std::uint32_t>(r);
        ++counts[r];
      }
      model.bootstrap_counts[t] = std::move(counts);
    } else {
      std::iota(rows.begin(), rows.end(), 0U);
    }
    model.trees[t] = fit_cart_rows(x, y_index, weights, model.class_vocab.size(), std::move(rows),
                                   tree_config);
  });
  return model;
}

Matrix ForestModel::predict_proba(const Matrix& x) const { return predict_proba(x, config.policy); }

Matrix ForestModel::predict_proba(const Matrix& x, ExecPolicy policy) const {
  if (x.cols() != num_features) {
    throw ConfigError("predict_proba: expected " + std::to_string(num_features) + " columns");
  }
  const std::size_t c = class_vocab.size();
  Matrix out(x.rows(), c);
  const double scale = 1.0 / static_cast<double>(trees.size());
  kernels::for_each_index(x.rows(), policy, [&](std::size_t i) {
    auto row = out.row(i);
    for (const DecisionTree& tree : trees) {
      const auto& p = tree.posterior(x.row(i));
      for (std::size_t k = 0; k < c; ++k) row[k] += p[k];
    }
    for (std::size_t k = 0; k < c; ++k) row[k] *= scale;
  });
  return out;
}

namespace {

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

}  // namespace

OobEstimate oob_error(const ForestModel& model, const Matrix& x, std::span<const int> y) {
  if (model.bootstrap_counts.empty()) {
    throw ConfigError("oob_error: model was trained without bootstrap");
  }
  if (x.rows() != model.bootstrap_counts.front().size() || y.size() != x.rows()) {
    throw ConfigError("oob_error: data does not match the training set");
  }
  const std::vector<int> y_index = dense_labels(y, model.class_vocab);
  const std::size_t c = model.class_vocab.size();
  OobEstimate est;
  std::size_t wrong = 0;
  std::vector<double> votes(c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::fill(votes.begin(), votes.end(), 0.0);
    std::size_t voters = 0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (model.bootstrap_counts[t][i] != 0) continue;
      const auto& p = model.trees[t].posterior(x.row(i));
      for (std::size_t k = 0; k < c; ++k) votes[k] += p[k];
      ++voters;
    }
    if (voters == 0) {
      ++est.skipped;
      continue;
    }
    ++est.scored;
    if (static_cast<int>(argmax(votes)) != y_index[i]) ++wrong;
  }
  est.error = est.scored == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(est.scored);
  return est;
}

std::vector<double> mdi_importance(const ForestModel& model) {
  std::vector<double> out(model.num_features, 0.0);
  for (const DecisionTree& tree : model.trees) {
    for (std::size_t f = 0; f < out.size(); ++f) out[f] += tree.importance[f];
  }
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0) {
    for (double& v : out) v /= total;
  } else if (!out.empty()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
  return out;
}

ForestDiagnostics forest_diagnostics(const ForestModel& model, const Matrix& x,
                                     std::span<const int> y) {
  if (model.bootstrap_counts.empty()) {
    throw ConfigError("forest_diagnostics: model was trained without bootstrap");
  }
  const std::vector<int> y_index = dense_labels(y, model.class_vocab);
  const std::size_t n = x.rows();
  const std::size_t t_count = model.trees.size();
  const std::size_t words = (n + 63) / 64;

  // Bitsets of OOB rows and of OOB rows the tree classifies correctly.
  std::vector<std::vector<std::uint64_t>> oob(t_count, std::vector<std::uint64_t>(words, 0));
  std::vector<std::vector<std::uint64_t>> correct(t_count, std::vector<std::uint64_t>(words, 0));
  std::vector<double> tree_errors(t_count, 0.0);
  std::vector<bool> has_oob(t_count, false);
  kernels::for_each_index(t_count, model.config.policy, [&](std::size_t t) {
    std::size_t seen = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (model.bootstrap_counts[t][i] != 0) continue;
      oob[t][i / 64] |= 1ULL << (i % 64);
      ++seen;
      if (static_cast<int>(argmax(model.trees[t].posterior(x.row(i)))) == y_index[i]) {
        correct[t][i / 64] |= 1ULL << (i % 64);
        ++hits;
      }
    }
    has_oob[t] = seen > 0;
    tree_errors[t] = seen == 0 ? 0.0 : 1.0 - static_cast<double>(hits) / static_cast<double>(seen);
  });

  ForestDiagnostics diag;
  std::size_t with_oob = 0;
  for (std::size_t t = 0; t < t_count; ++t) {
    if (!has_oob[t]) continue;
    diag.tree_error += tree_errors[t];
    ++with_oob;
  }
  if (with_oob > 0) diag.tree_error /= static_cast<double>(with_oob);

  std::vector<double> corr_sum(t_count, 0.0);
  std::vector<std::size_t> corr_count(t_count, 0);
  kernels::for_each_index(t_count, model.config.policy, [&](std::size_t a) {
    for (std::size_t b = a + 1; b < t_count; ++b) {
      double both = 0, sa = 0, sb = 0, sab = 0;
      for (std::size_t w = 0; w < words; ++w) {
        const std::uint64_t mask = oob[a][w] & oob[b][w];
        both += std::popcount(mask);
        sa += std::popcount(correct[a][w] & mask);
        sb += std::popcount(correct[b][w] & mask);
        sab += std::popcount(correct[a][w] & correct[b][w]);
      }
      const double var_a = both * sa - sa * sa;
      const double var_b = both * sb - sb * sb;
      if (both < 2 || var_a <= 0 || var_b <= 0) continue;
      corr_sum[a] += (both * sab - sa * sb) / std::sqrt(var_a * var_b);
      ++corr_count[a];
    }
  });
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t t = 0; t < t_count; ++t) {
    total += corr_sum[t];
    pairs += corr_count[t];
  }
  diag.correlation = pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
  diag.bound = rf_error_bound(diag.tree_error, diag.correlation, t_count);
  return diag;
}

double rf_error_bound(double tree_error, double rho, std::size_t num_trees) {
  return tree_error * (1.0 - rho) / static_cast<double>(num_trees) + rho * tree_error;
}

nlohmann::json tree_to_json(const DecisionTree& tree, std::span<const std::string> names) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) {
      nodes.push_back({{"leaf", true}, {"posterior", node.posterior}, {"weight", node.weight}});
    } else {
      const auto f = static_cast<std::size_t>(node.feature);
      nodes.push_back({{"leaf", false},
                       {"feature", node.feature},
                       {"feature_name", f < names.size() ? names[f] : std::to_string(f)},
                       {"threshold", node.threshold},
                       {"left", node.left},
                       {"right", node.right},
                       {"weight", node.weight}});
    }
  }
  return {{"num_classes", tree.num_classes}, {"nodes", nodes}};
}

nlohmann::json forest_to_json(const ForestModel& model, std::span<const std::string> names) {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : model.trees) trees.push_back(tree_to_json(tree, names));
  return {{"kind", "random_forest"},
          {"class_vocab", model.class_vocab},
          {"subspace_size", model.subspace_size},
          {"bootstrap", model.config.bootstrap},
          {"trees", trees}};
}

}  // namespace wineqc
