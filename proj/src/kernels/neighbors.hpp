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

// Per-item bodies shared by the serial and OpenMP kernels. Each body reads
// shared inputs and writes one disjoint output slot.

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "wineqc/kernels.hpp"

namespace wineqc::kernels::detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

inline std::vector<std::size_t> knn_for_member(const Matrix& x,
                                               std::span<const std::size_t> members,
                                               std::size_t q, std::size_t k) {
  const std::size_t self = members[q];
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(members.size());
  for (std::size_t m : members) {
    if (m == self) continue;
    cand.emplace_back(squared_distance(x.row(self), x.row(m)), m);
  }
  const std::size_t take = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
  std::vector<std::size_t> out(take);
  for (std::size_t t = 0; t < take; ++t) out[t] = cand[t].second;
  return out;
}

inline std::size_t nearest_for_row(const Matrix& x, std::size_t i) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = i;
  for (std::size_t j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    const double dist = squared_distance(x.row(i), x.row(j));
    if (dist < best) {
      best = dist;
      best_index = j;
    }
  }
  return best_index;
}

inline void histogram_for_feature(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                                  std::span<const double> grad, std::span<const double> hess,
                                  std::size_t feature, std::span<HistBin> out) {
  HistBin* slice = out.data() + binned.offsets[feature];
  std::fill(slice, slice + binned.num_bins[feature], HistBin{});
  const std::uint16_t* column = binned.bins.data() + feature * binned.rows;
  for (std::uint32_t r : rows) {
    HistBin& bin = slice[column[r]];
    bin.grad += grad[r];
    bin.hess += hess[r];
    ++bin.count;
  }
}

}  // namespace wineqc::kernels::detail
