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
#include <vector>

#include "json.hpp"

#include "wineqc/data.hpp"

namespace wineqc {

/// Disjoint train/test index lists covering 0..n-1 (both sorted).
struct HoldoutSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  bool operator==(const HoldoutSplit&) const = default;
};

struct Fold {
  std::vector<std::size_t> train_indices;       // sorted
  std::vector<std::size_t> validation_indices;  // sorted
  bool operator==(const Fold&) const = default;
};

/// K disjoint (train, validation) pairs. Indices address the label/group
/// vectors the plan was built from.
struct FoldPlan {
  std::vector<Fold> folds;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool operator==(const FoldPlan&) const = default;
};

/// Stratified holdout. The test size is round(n * test_fraction); each class
/// receives floor(n_c * test_fraction) rows plus one of the leftover slots by
/// largest fractional remainder, so every class lands within one row of its
/// exact share. Rows are shuffled within class by `seed`.
HoldoutSplit stratified_holdout(std::span<const int> labels, double test_fraction,
                                std::uint64_t seed);
HoldoutSplit stratified_holdout(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// Stratified group K-fold. Groups are shuffled by `seed`, stably sorted by
/// size (largest first) and greedily placed into the fold that minimises the
/// mean across classes of the per-class fold-share standard deviation.
/// Ties go to the fold with fewer rows, then the lower fold index.
FoldPlan stratified_group_kfold(std::span<const int> labels,
                                std::span<const std::int64_t> groups, std::size_t k,
                                std::uint64_t seed);

void to_json(nlohmann::json& j, const HoldoutSplit& split);
void from_json(const nlohmann::json& j, HoldoutSplit& split);
void to_json(nlohmann::json& j, const FoldPlan& plan);
void from_json(const nlohmann::json& j, FoldPlan& plan);

}  // namespace wineqc
