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
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wineqc/common.hpp"
#include "wineqc/forest.hpp"
#include "wineqc/kernels.hpp"

namespace wineqc {

enum class Growth { kLevel, kLeafWise, kOblivious };

struct GossConfig {
  bool enabled = false;
  double top_rate = 0.2;
  double other_rate = 0.1;
};

struct BoostConfig {
  std::size_t rounds = 100;
  double learning_rate = 0.1;
  double subsample = 1.0;        // row fraction per round, without replacement
  double column_fraction = 1.0;  // feature fraction per tree
  std::size_t max_depth = 6;
  double min_child_weight = 0.0;  // on hessian sums
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;  // first-order trees only
  MaxFeatures max_features{MaxFeatures::Kind::kAll, 1.0};  // per split, first-order only
  double gamma = 0.0;
  double lambda_reg = 1.0;
  double alpha_reg = 0.0;
  std::size_t num_leaves = 31;
  Growth growth = Growth::kLevel;
  GossConfig goss;
  bool extra_trees = false;
  double bagging_temperature = 0.0;  // > 0: Bayesian bootstrap weights (-ln u)^t per round
  std::size_t bins = 256;
  std::size_t early_stopping_rounds = 10;  // 0 disables
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  ExecPolicy policy = ExecPolicy::kParallel;

  void validate() const;
};

/// Per-row, per-class negative gradient and hessian of the softmax deviance.
struct GradHess {
  Matrix g;
  Matrix h;
};

/// g_c = w (1[y = c] - p_c), h_c = w p_c (1 - p_c), p = softmax(raw row).
GradHess softmax_grad_hess(std::span<const int> y_index, const Matrix& raw,
                           std::span<const double> weights);

/// Weighted mean softmax deviance.
double softmax_deviance(std::span<const int> y_index, const Matrix& raw,
                        std::span<const double> weights);

/// 1/2 (G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)) - gamma. A term whose
/// denominator is zero contributes zero.
double split_gain(double g, double h, double g_left, double h_left, double g_right,
                  double h_right, double lambda, double gamma);

/// -T(G)/(H + lambda), T soft-thresholding by alpha.
double leaf_weight(double g, double h, double lambda, double alpha = 0.0);

/// Per-feature bin edges. A value's bin is the number of edges <= it.
struct BinEdges {
  std::vector<std::vector<double>> edges;
  bool operator==(const BinEdges&) const = default;
};

/// Midpoints between distinct values when there are at most B of them,
/// otherwise the deduplicated q/B quantiles (q = 1..B-1, linear interpolation).
BinEdges fit_bins(const Matrix& x, std::size_t max_bins);
BinnedMatrix bin_matrix(const BinEdges& edges, const Matrix& x);

struct GossSample {
  std::vector<std::uint32_t> indices;  // ascending
  std::vector<double> multipliers;     // aligned with indices
};

/// Keeps the ceil(a n) largest norms, then ceil(b n) uniform draws from the
/// rest weighted by (1 - a) / b. Equal norms rank by lower index.
GossSample goss_sample(std::span<const double> grad_norms, double top_rate, double other_rate,
                       std::uint64_t seed);

/// Regression tree node. Internal nodes send x[feature] <= threshold left.
struct RegNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const RegNode&) const = default;
};

struct RegTree {
  std::vector<RegNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t num_leaves() const;
  std::size_t depth() const;
  bool operator==(const RegTree&) const = default;
};

struct SplitCandidate {
  int feature = -1;
  std::size_t bin = 0;  // left side holds bins <= bin
  double gain = 0.0;
  double g_left = 0.0, h_left = 0.0, g_right = 0.0, h_right = 0.0;
  std::size_t n_left = 0, n_right = 0;

  bool valid() const { return feature >= 0; }
};

struct SplitConstraints {
  double lambda = 1.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double min_child_weight = 0.0;
  std::size_t min_samples_leaf = 1;
};

/// Best positive-gain boundary over a node histogram, scanning the listed
/// features in ascending order and bins in ascending order (ties keep the
/// first). `hist` is laid out by binned.offsets.
SplitCandidate best_histogram_split(const BinnedMatrix& binned, std::span<const HistBin> hist,
                                    std::span<const std::size_t> features,
                                    const SplitConstraints& constraints);

struct RoundLog {
  std::size_t round = 0;
  double train_loss = 0.0;
  double validation_weighted_f1 = 0.0;  // NaN without early stopping
};

struct BoostModel {
  std::string kind;  // "gbdt_first_order" or "gbdt_second_order"
  std::vector<std::vector<RegTree>> rounds;  // [round][class]
  std::vector<double> base_scores;
  double learning_rate = 0.1;
  std::vector<double> gain;  // unnormalised per-feature gain
  std::size_t best_iteration = 0;
  std::size_t num_features = 0;
  std::vector<int> class_vocab;
  std::vector<RoundLog> log;

  Matrix predict_raw(const Matrix& x) const;
  /// Softmax of predict_raw; columns follow class_vocab.
  Matrix predict_proba(const Matrix& x) const;
};

/// Friedman-style booster: per round and class, an exact least-squares tree
/// on the negative gradients with Newton leaf values.
BoostModel fit_gbm_first_order(const Matrix& x, std::span<const int> y,
                               std::span<const double> weights, const BoostConfig& config);

/// Histogram booster with regularised second-order gain.
BoostModel fit_gbm_second_order(const Matrix& x, std::span<const int> y,
                                std::span<const double> weights, const BoostConfig& config);

/// Normalised gain importance (uniform if no split was ever made).
std::vector<double> gain_importance(const BoostModel& model);

void write_round_log(std::ostream& out, const BoostModel& model);

/// (sum of earlier y for `category` + a P) / (earlier count + a).
double ordered_target_statistic(std::span<const std::pair<int, double>> prior_pairs,
                                int query_category, double a, double prior);

/// Encodes each position with the statistic over strictly earlier positions.
std::vector<double> ordered_target_encode(std::span<const int> categories,
                                          std::span<const double> targets, double a,
                                          double prior);

nlohmann::json boost_to_json(const BoostModel& model);

}  // namespace wineqc
