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

#include <span>
#include <vector>

#include "json.hpp"

#include "wineqc/common.hpp"

namespace wineqc {

/// Square count matrix; entry (i, j) counts true class i predicted as j,
/// classes ordered by the vocabulary.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

struct ClassScore {
  int label = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool operator==(const ClassScore&) const = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double macro_auc = 0.0;
  double mcc = 0.0;
  double brier = 0.0;
  std::vector<ClassScore> per_class;
  ConfusionMatrix confusion;
  bool operator==(const MetricsReport&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::span<const int> class_vocab);

/// Precision/recall/F1 per vocabulary class. A class with P + R = 0 scores
/// F1 = 0.
std::vector<ClassScore> per_class_scores(const ConfusionMatrix& confusion,
                                         std::span<const int> class_vocab);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Support-weighted mean of per-class F1.
double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred,
                   std::span<const int> class_vocab);

/// Unweighted mean of per-class F1 over classes present in y_true.
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred,
                std::span<const int> class_vocab);

/// One-vs-rest Mann-Whitney AUC averaged over classes that have both
/// positives and negatives in y_true. `proba` columns follow class_vocab.
double macro_auc_ovr(std::span<const int> y_true, const Matrix& proba,
                     std::span<const int> class_vocab);

/// Multiclass Matthews correlation (covariance form); 0 when either
/// marginal variance vanishes.
double mcc_multiclass(const ConfusionMatrix& confusion);

/// Mean over samples of the squared distance between the probability row
/// and the one-hot truth. Range [0, 2].
double brier_multiclass(std::span<const int> y_true, const Matrix& proba,
                        std::span<const int> class_vocab);

/// Index-of-max per row mapped through class_vocab (ties: lower index).
std::vector<int> argmax_labels(const Matrix& proba, std::span<const int> class_vocab);

/// Every metric at once. Predictions are argmax_labels(proba).
MetricsReport evaluate(std::span<const int> y_true, const Matrix& proba,
                       std::span<const int> class_vocab);

void to_json(nlohmann::json& j, const ClassScore& s);
void from_json(const nlohmann::json& j, ClassScore& s);
void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

}  // namespace wineqc
