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

#include "wineqc/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace wineqc {

HoldoutSplit stratified_holdout(std::span<const int> labels, double test_fraction,
                                std::uint64_t seed) {
  if (labels.empty()) throw ConfigError("stratified_holdout: empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("stratified_holdout: test_fraction must lie in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  const auto n = static_cast<double>(labels.size());
  const auto target = static_cast<std::size_t>(std::llround(n * test_fraction));

  struct Share {
    std::size_t take;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t allocated = 0;
  for (const auto& [label, rows] : by_class) {
    const double exact = static_cast<double>(rows.size()) * test_fraction;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    shares.push_back({base, exact - static_cast<double>(base)});
    allocated += base;
  }
  // Largest remainder first; equal remainders keep class order.
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shares[a].remainder > shares[b].remainder;
  });
  for (std::size_t k = 0; allocated < target && k < order.size(); ++k) {
    if (shares[order[k]].remainder > 0.0) {
      ++shares[order[k]].take;
      ++allocated;
    }
  }

  Rng rng(seed);
  HoldoutSplit split;
  std::size_t c = 0;
  for (auto& [label, rows] : by_class) {
    shuffle(rows, rng);
    const std::size_t take = shares[c++].take;
    split.test_indices.insert(split.test_indices.end(), rows.begin(), rows.begin() + take);
    split.train_indices.insert(split.train_indices.end(), rows.begin() + take, rows.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

HoldoutSplit stratified_holdout(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  return stratified_holdout(std::span<const int>(dataset.labels), test_fraction, seed);
}

FoldPlan stratified_group_kfold(std::span<const int> labels, std::span<const std::int64_t> groups,
                                std::size_t k, std::uint64_t seed) {
  if (labels.empty()) throw ConfigError("stratified_group_kfold: empty input");
  if (labels.size() != groups.size()) {
    throw ConfigError("stratified_group_kfold: labels and groups differ in length");
  }
  if (k < 2) throw ConfigError("stratified_group_kfold: k must be at least 2");

  const std::vector<int> vocab = vocabulary_of(labels);
  const std::size_t num_classes = vocab.size();
  auto class_of = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(vocab.begin(), vocab.end(), label) -
                                    vocab.begin());
  };

  struct Group {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> class_counts;
  };
  std::vector<Group> group_list;
  std::unordered_map<std::int64_t, std::size_t> group_slot;
  std::vector<double> class_total(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = group_slot.try_emplace(groups[i], group_list.size());
    if (inserted) group_list.push_back({{}, std::vector<std::size_t>(num_classes, 0)});
    Group& g = group_list[it->second];
    g.rows.push_back(i);
    const std::size_t c = class_of(labels[i]);
    ++g.class_counts[c];
    class_total[c] += 1.0;
  }
  if (k > group_list.size()) {
    throw ConfigError("stratified_group_kfold: k=" + std::to_string(k) + " exceeds the " +
                      std::to_string(group_list.size()) + " distinct groups");
  }

  std::vector<std::size_t> order(group_list.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return group_list[a].rows.size() > group_list[b].rows.size();
  });

  std::vector<std::vector<double>> fold_counts(k, std::vector<double>(num_classes, 0.0));
  std::vector<std::size_t> fold_sizes(k, 0);
  std::vector<std::size_t> assignment(group_list.size(), 0);

  auto deviation = [&](std::size_t candidate, const Group& g) {
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (std::size_t f = 0; f < k; ++f) {
        double count = fold_counts[f][c];
        if (f == candidate) count += static_cast<double>(g.class_counts[c]);
        const double share = count / class_total[c];
        sum += share;
        sum_sq += share * share;
      }
      const double mean = sum / static_cast<double>(k);
      const double var = std::max(0.0, sum_sq / static_cast<double>(k) - mean * mean);
      total += std::sqrt(var);
    }
    return total / static_cast<double>(num_classes);
  };

  for (std::size_t gi : order) {
    const Group& g = group_list[gi];
    std::size_t best = 0;
    double best_cost = deviation(0, g);
    for (std::size_t f = 1; f < k; ++f) {
      const double cost = deviation(f, g);
      const double tol = 1e-12 * std::max(1.0, std::abs(best_cost));
      if (cost < best_cost - tol ||
          (std::abs(cost - best_cost) <= tol && fold_sizes[f] < fold_sizes[best])) {
        best = f;
        best_cost = cost;
      }
    }
    assignment[gi] = best;
    fold_sizes[best] += g.rows.size();
    for (std::size_t c = 0; c < num_classes; ++c) {
      fold_counts[best][c] += static_cast<double>(g.class_counts[c]);
    }
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(k);
  std::vector<std::size_t> row_fold(labels.size(), 0);
  for (std::size_t gi = 0; gi < group_list.size(); ++gi) {
    for (std::size_t row : group_list[gi].rows) row_fold[row] = assignment[gi];
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (row_fold[i] == f ? plan.folds[f].validation_indices : plan.folds[f].train_indices)
          .push_back(i);
    }
  }
  return plan;
}

void to_json(nlohmann::json& j, const HoldoutSplit& split) {
  j = nlohmann::json{{"train", split.train_indices}, {"test", split.test_indices}};
}

void from_json(const nlohmann::json& j, HoldoutSplit& split) {
  j.at("train").get_to(split.train_indices);
  j.at("test").get_to(split.test_indices);
}

void to_json(nlohmann::json& j, const FoldPlan& plan) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    folds.push_back({{"fold", f},
                     {"train", plan.folds[f].train_indices},
                     {"validation", plan.folds[f].validation_indices}});
  }
  j = nlohmann::json{{"k", plan.k}, {"seed", plan.seed}, {"folds", folds}};
}

void from_json(const nlohmann::json& j, FoldPlan& plan) {
  j.at("k").get_to(plan.k);
  j.at("seed").get_to(plan.seed);
  plan.folds.clear();
  for (const auto& f : j.at("folds")) {
    Fold fold;
    f.at("train").get_to(fold.train_indices);
    f.at("validation").get_to(fold.validation_indices);
    plan.folds.push_back(std::move(fold));
  }
}

}  // namespace wineqc
