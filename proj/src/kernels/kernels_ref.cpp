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

// Serial reference kernels. The OpenMP kernels are tested against these.

#include "neighbors.hpp"
#include "wineqc/kernels.hpp"

namespace wineqc::kernels::ref {

std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k) {
  std::vector<std::vector<std::size_t>> out(members.size());
  for (std::size_t q = 0; q < members.size(); ++q) {
    out[q] = detail::knn_for_member(x, members, q, k);
  }
  return out;
}

std::vector<std::size_t> nearest_neighbor(const Matrix& x) {
  std::vector<std::size_t> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = detail::nearest_for_row(x, i);
  return out;
}

void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out) {
  for (std::size_t f : features) detail::histogram_for_feature(binned, rows, grad, hess, f, out);
}

}  // namespace wineqc::kernels::ref
