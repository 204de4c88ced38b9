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
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wineqc/common.hpp"
#include "wineqc/data.hpp"

namespace wineqc {

/// Per-feature z-score transform fitted on a training fold.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;  // population std; 1 for near-constant columns

  Matrix apply(const Matrix& x) const;
  Matrix inverse(const Matrix& z) const;
  bool operator==(const Standardizer&) const = default;
};

/// Columns whose std falls below this get scale 1.
inline constexpr double kMinScale = 1e-12;

Standardizer fit_standardizer(const Matrix& x_train);
Matrix apply_standardizer(const Standardizer& s, const Matrix& x);

/// Labelled sample matrix produced by the resamplers.
struct LabeledMatrix {
  Matrix x;
  std::vector<int> y;
  bool operator==(const LabeledMatrix&) const = default;
};

struct SmoteOptions {
  std::size_t k_max = 5;
  std::uint64_t seed = 0;
  ExecPolicy policy = ExecPolicy::kParallel;
};

/// SMOTE interpolation: x_i + lambda * (x_neighbour - x_i), lambda in [0, 1).
std::vector<double> smote_interpolate(std::span<const double> origin,
                                      std::span<const double> neighbour, double lambda);

/// Raises each class to target_counts[c] with synthetic samples. Originals
/// come first in the output, followed by the synthetic rows class by class.
/// Neighbours are the k = min(k_max, n_c - 1) nearest same-class rows; a
/// singleton class is duplicated. Origins cycle through a seeded permutation
/// of the class members.
LabeledMatrix smote_oversample(const Matrix& x, std::span<const int> y,
                               const std::map<int, std::size_t>& target_counts,
                               const SmoteOptions& options = {});

/// Mutual cross-class 1-nearest-neighbour pairs (i < j), ties to the lower
/// index, sorted by i.
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Matrix& x,
                                                             std::span<const int> y,
                                                             ExecPolicy policy =
                                                                 ExecPolicy::kParallel);

struct ResampleReport {
  ClassCounts counts_before;
  ClassCounts counts_after;
  double ir_before = 1.0;
  double ir_after = 1.0;
  double ir_improvement = 1.0;
  std::size_t synthetic_count = 0;
  std::size_t tomek_removed = 0;
  bool operator==(const ResampleReport&) const = default;
};

struct ResampleResult {
  LabeledMatrix data;
  ResampleReport report;
};

/// SMOTE to the majority count, then one pass of Tomek cleaning that drops
/// the member of each link whose class was larger before oversampling
/// (links between classes of equal original size are kept).
ResampleResult smote_tomek(const Matrix& x, std::span<const int> y, std::uint64_t seed,
                           ExecPolicy policy = ExecPolicy::kParallel);

/// Balanced class weights w_c = N / (C * n_c), expanded per instance.
std::vector<double> inverse_frequency_weights(std::span<const int> y);

/// Largest class count divided by the smallest.
double imbalance_ratio(const ClassCounts& counts);

void to_json(nlohmann::json& j, const ClassCounts& counts);
void from_json(const nlohmann::json& j, ClassCounts& counts);
void to_json(nlohmann::json& j, const ResampleReport& report);
void from_json(const nlohmann::json& j, ResampleReport& report);
void to_json(nlohmann::json& j, const Standardizer& s);
void from_json(const nlohmann::json& j, Standardizer& s);

}  // namespace wineqc
