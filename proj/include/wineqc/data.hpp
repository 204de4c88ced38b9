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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wineqc/common.hpp"

namespace wineqc {

/// Immutable sample table shared by every downstream stage.
///
/// Labels stay as raw quality scores (0..10). Dense class indices are a
/// per-fit concern and are derived from a training fold's vocabulary.
struct Dataset {
  Matrix features;                         // n x d, original units
  std::vector<int> labels;                 // length n
  std::vector<std::int64_t> groups;        // length n, opaque ids
  std::vector<std::string> feature_names;  // length d
  std::vector<int> class_vocab;            // sorted distinct labels

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return features.cols(); }

  /// Rows `indices` in the given order; vocabulary is recomputed.
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Keeps only `columns` (in the given order).
  Dataset with_features(std::span<const std::size_t> columns) const;

  bool operator==(const Dataset&) const = default;
};

/// Per-class multiset counts; `total` is N.
struct ClassCounts {
  std::map<int, std::size_t> counts;
  std::size_t total = 0;

  std::size_t count(int label) const;
  std::size_t num_classes() const { return counts.size(); }
  bool operator==(const ClassCounts&) const = default;
};

struct CsvOptions {
  char delimiter = ';';
  std::string label_column = "quality";
};

/// Reads a headered delimited file (UCI wine layout by default). Every row
/// must parse; the first bad row aborts ingestion with its line number.
/// Groups are assigned as the row index.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

ClassCounts class_counts(std::span<const int> labels);

/// Sorted distinct values of `labels`.
std::vector<int> vocabulary_of(std::span<const int> labels);

/// Checks the Dataset invariants, throwing DataError on the first violation.
void validate(const Dataset& dataset);

}  // namespace wineqc
