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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wineqc/common.hpp"

namespace wineqc {

enum class Criterion { kGini, kEntropy, kLogLoss };

/// Size of the per-node random feature subset.
struct MaxFeatures {
  enum class Kind { kSqrt, kLog2, kFraction, kAll };
  Kind kind = Kind::kSqrt;
  double fraction = 1.0;

  std::size_t resolve(std::size_t num_features) const;
  bool operator==(const MaxFeatures&) const = default;
};

struct TreeConfig {
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features{MaxFeatures::Kind::kAll, 1.0};
  Criterion criterion = Criterion::kGini;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Internal nodes send x[feature] <= threshold to `left`. Leaves carry a
/// class posterior and their weighted sample mass.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> posterior;
  double weight = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t num_classes = 0;
  std::vector<double> importance;  // weighted impurity decrease per feature / root weight

  const std::vector<double>& posterior(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

/// Impurity of a class-weight vector.
double impurity(std::span<const double> class_weights, Criterion criterion);

/// CART on dense class indices 0..num_classes-1. Thresholds sit at
/// midpoints of consecutive distinct values; equal gains keep the lower
/// feature index, then the lower threshold.
DecisionTree fit_cart(const Matrix& x, std::span<const int> y_index,
                      std::span<const double> weights, std::size_t num_classes,
                      const TreeConfig& config);

/// Same as above over an explicit row multiset (duplicates allowed).
DecisionTree fit_cart_rows(const Matrix& x, std::span<const int> y_index,
                           std::span<const double> weights, std::size_t num_classes,
                           std::vector<std::uint32_t> rows, const TreeConfig& config);

struct ForestConfig {
  std::size_t num_trees = 100;
  TreeConfig tree{0, 2, 1, {MaxFeatures::Kind::kSqrt, 1.0}, Criterion::kGini, 0};
  bool bootstrap = true;
  std::uint64_t seed = 0;
  ExecPolicy policy = ExecPolicy::kParallel;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  /// Per tree, how often each training row was drawn. Empty without bootstrap.
  std::vector<std::vector<std::uint16_t>> bootstrap_counts;
  std::size_t subspace_size = 0;
  std::size_t num_features = 0;
  ForestConfig config;
  std::vector<int> class_vocab;

  /// Mean of per-tree leaf posteriors; columns follow class_vocab.
  Matrix predict_proba(const Matrix& x) const;
  Matrix predict_proba(const Matrix& x, ExecPolicy policy) const;
};

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y,
                              std::span<const double> weights, const ForestConfig& config);

struct OobEstimate {
  double error = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;  // rows drawn by every tree
};

/// Misclassification rate where each row is voted on only by the trees that
/// did not draw it.
OobEstimate oob_error(const ForestModel& model, const Matrix& x, std::span<const int> y);

/// Normalised mean decrease in impurity.
std::vector<double> mdi_importance(const ForestModel& model);

struct ForestDiagnostics {
  double tree_error = 0.0;   // mean per-tree OOB error
  double correlation = 0.0;  // mean pairwise Pearson correlation of OOB correctness
  double bound = 0.0;
};

ForestDiagnostics forest_diagnostics(const ForestModel& model, const Matrix& x,
                                     std::span<const int> y);

/// tree_error * (1 - rho) / T + rho * tree_error.
double rf_error_bound(double tree_error, double rho, std::size_t num_trees);

nlohmann::json tree_to_json(const DecisionTree& tree, std::span<const std::string> feature_names);
nlohmann::json forest_to_json(const ForestModel& model, std::span<const std::string> feature_names);

}  // namespace wineqc
