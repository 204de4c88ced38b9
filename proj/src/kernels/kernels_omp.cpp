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

#include <omp.h>

#include "neighbors.hpp"
#include "wineqc/kernels.hpp"

namespace wineqc::kernels {

namespace omp {

std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k) {
  std::vector<std::vector<std::size_t>> out(members.size());
  const auto n = static_cast<std::int64_t>(members.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] =
        detail::knn_for_member(x, members, static_cast<std::size_t>(q), k);
  }
  return out;
}

std::vector<std::size_t> nearest_neighbor(const Matrix& x) {
  std::vector<std::size_t> out(x.rows());
  const auto n = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = detail::nearest_for_row(x, static_cast<std::size_t>(i));
  }
  return out;
}

void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out) {
  const auto n = static_cast<std::int64_t>(features.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t f = 0; f < n; ++f) {
    detail::histogram_for_feature(binned, rows, grad, hess, features[static_cast<std::size_t>(f)],
                                  out);
  }
}

}  // namespace omp

std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k, ExecPolicy policy) {
  return policy == ExecPolicy::kSerial ? ref::knn_within(x, members, k)
                                       : omp::knn_within(x, members, k);
}

std::vector<std::size_t> nearest_neighbor(const Matrix& x, ExecPolicy policy) {
  return policy == ExecPolicy::kSerial ? ref::nearest_neighbor(x) : omp::nearest_neighbor(x);
}

void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out,
                     ExecPolicy policy) {
  if (policy == ExecPolicy::kSerial) {
    ref::build_histogram(binned, rows, grad, hess, features, out);
  } else {
    omp::build_histogram(binned, rows, grad, hess, features, out);
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace wineqc::kernels
