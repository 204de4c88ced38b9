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

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::ref and an OpenMP version in kernels::omp; the dispatchers below
// pick one by ExecPolicy. The two paths are bit-identical: work is split so
// that no floating-point reduction crosses threads.

#include <cstddef>
#include <exception>
#include <cstdint>
#include <span>
#include <vector>

#include "wineqc/common.hpp"

namespace wineqc {

/// Quantile-binned feature matrix, column-major.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> bins;      // cols * rows
  std::vector<std::size_t> num_bins;    // per feature
  std::vector<std::size_t> offsets;     // per feature, into a flat histogram

  std::uint16_t at(std::size_t row, std::size_t feature) const {
    return bins[feature * rows + row];
  }
  std::size_t total_bins() const { return offsets.empty() ? 0 : offsets.back() + num_bins.back(); }
};

/// Gradient/hessian/count accumulator for one bin.
struct HistBin {
  double grad = 0.0;
  double hess = 0.0;
  std::uint32_t count = 0;
};

namespace kernels {

namespace ref {
std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k);
std::vector<std::size_t> nearest_neighbor(const Matrix& x);
void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out);
}  // namespace ref

namespace omp {
std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k);
std::vector<std::size_t> nearest_neighbor(const Matrix& x);
void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out);
}  // namespace omp

/// For each member, the k nearest other members by Euclidean distance
/// (ties: lower row index first). Result rows are row indices into `x`.
std::vector<std::vector<std::size_t>> knn_within(const Matrix& x,
                                                 std::span<const std::size_t> members,
                                                 std::size_t k, ExecPolicy policy);

/// Row index of each row's nearest other row (ties: lower index).
std::vector<std::size_t> nearest_neighbor(const Matrix& x, ExecPolicy policy);

/// Accumulates (grad, hess, count) of `rows` into the bins of `features`.
/// Only the histogram slices of the listed features are touched; they are
/// zeroed first.
void build_histogram(const BinnedMatrix& binned, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<const std::size_t> features, std::span<HistBin> out,
                     ExecPolicy policy);

/// Runs fn(i) for i in [0, n). Iterations must be independent.
template <typename Fn>
void for_each_index(std::size_t n, ExecPolicy policy, Fn&& fn) {
  if (policy == ExecPolicy::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto count = static_cast<std::int64_t>(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(wineqc_for_each_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Number of threads the parallel kernels will use.
int max_threads();

}  // namespace kernels
}  // namespace wineqc
