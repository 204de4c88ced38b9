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

#include "wineqc/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wineqc/kernels.hpp"

namespace wineqc {

Standardizer fit_standardizer(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw ConfigError("fit_standardizer: empty input");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Standardizer s;
  s.means.assign(d, 0.0);
  s.scales.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x(i, j))) throw ConfigError("fit_standardizer: non-finite value");
      sum += x(i, j);
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.means[j] = mean;
    s.scales[j] = sd < kMinScale ? 1.0 : sd;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != means.size()) {
    throw ConfigError("apply_standardizer: expected " + std::to_string(means.size()) +
                      " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - means[j]) / scales[j];
  }
  return out;
}

Matrix Standardizer::inverse(const Matrix& z) const {
  if (z.cols() != means.size()) throw ConfigError("Standardizer::inverse: dimension mismatch");
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) = z(i, j) * scales[j] + means[j];
  }
  return out;
}

Matrix apply_standardizer(const Standardizer& s, const Matrix& x) { return s.apply(x); }

std::vector<double> smote_interpolate(std::span<const double> origin,
                                      std::span<const double> neighbour, double lambda) {
  std::vector<double> out(origin.size());
  for (std::size_t j = 0; j < origin.size(); ++j) {
    out[j] = origin[j] + lambda * (neighbour[j] - origin[j]);
  }
  return out;
}

LabeledMatrix smote_oversample(const Matrix& x, std::span<const int> y,
                               const std::map<int, std::size_t>& target_counts,
                               const SmoteOptions& options) {
  if (x.rows() != y.size()) throw ConfigError("smote_oversample: X and y differ in length");
  if (options.k_max < 1) throw ConfigError("smote_oversample: k_max must be positive");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
  for (const auto& [label, target] : target_counts) {
    if (!members.contains(label)) {
      throw ConfigError("smote_oversample: class " + std::to_string(label) +
                        " has no samples to oversample");
    }
    if (target < members[label].size()) {
      throw ConfigError("smote_oversample: target for class " + std::to_string(label) +
                        " is below its current count");
    }
  }

  LabeledMatrix out{x, std::vector<int>(y.begin(), y.end())};
  for (const auto& [label, rows] : members) {
    auto target_it = target_counts.find(label);
    if (target_it == target_counts.end()) continue;
    const std::size_t deficit = target_it->second - rows.size();
    if (deficit == 0) continue;

    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(label)));
    const std::size_t k = std::min(options.k_max, rows.size() - 1);
    std::vector<std::vector<std::size_t>> neighbours;
    if (k > 0) neighbours = kernels::knn_within(x, rows, k, options.policy);

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);

    for (std::size_t s = 0; s < deficit; ++s) {
      const std::size_t q = order[s % order.size()];
      const auto origin = x.row(rows[q]);
      if (k == 0) {
        out.x.append_row(origin);
      } else {
        const std::size_t nb = neighbours[q][uniform_index(rng, neighbours[q].size())];
        const double lambda = uniform01(rng);
        out.x.append_row(smote_interpolate(origin, x.row(nb), lambda));
      }
      out.y.push_back(label);
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Matrix& x,
                                                             std::span<const int> y,
                                                             ExecPolicy policy) {
  if (x.rows() != y.size()) throw ConfigError("tomek_links: X and y differ in length");
  if (x.rows() < 2) throw ConfigError("tomek_links: need at least two samples");
  if (vocabulary_of(y).size() < 2) throw ConfigError("tomek_links: need at least two classes");

  const std::vector<std::size_t> nn = kernels::nearest_neighbor(x, policy);
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < nn.size(); ++i) {
    const std::size_t j = nn[i];
    if (i < j && nn[j] == i && y[i] != y[j]) links.emplace_back(i, j);
  }
  return links;
}

ResampleResult smote_tomek(const Matrix& x, std::span<const int> y, std::uint64_t seed,
                           ExecPolicy policy) {
  const ClassCounts before = class_counts(y);
  if (before.num_classes() < 2) throw ConfigError("smote_tomek: need at least two classes");

  std::size_t majority = 0;
  for (const auto& [label, count] : before.counts) majority = std::max(majority, count);
  std::map<int, std::size_t> targets;
  for (const auto& [label, count] : before.counts) targets[label] = majority;

  LabeledMatrix balanced = smote_oversample(x, y, targets, {5, seed, policy});
  const std::size_t synthetic = balanced.y.size() - y.size();

  // The larger class of a link is judged on the balanced counts; equal counts
  // keep both members.
  const ClassCounts mid = class_counts(balanced.y);
  std::vector<bool> drop(balanced.y.size(), false);
  for (const auto& [i, j] : tomek_links(balanced.x, balanced.y, policy)) {
    const std::size_t ci = mid.count(balanced.y[i]);
    const std::size_t cj = mid.count(balanced.y[j]);
    if (ci > cj) drop[i] = true;
    if (cj > ci) drop[j] = true;
  }

  ResampleResult result;
  result.data.x = Matrix(0, x.cols());
  std::size_t removed = 0;
  for (std::size_t i = 0; i < balanced.y.size(); ++i) {
    if (drop[i]) {
      ++removed;
      continue;
    }
    result.data.x.append_row(balanced.x.row(i));
    result.data.y.push_back(balanced.y[i]);
  }

  ResampleReport& report = result.report;
  report.counts_before = before;
  report.counts_after = class_counts(result.data.y);
  report.ir_before = imbalance_ratio(report.counts_before);
  report.ir_after = imbalance_ratio(report.counts_after);
  report.ir_improvement = report.ir_before / report.ir_after;
  report.synthetic_count = synthetic;
  report.tomek_removed = removed;
  return result;
}

std::vector<double> inverse_frequency_weights(std::span<const int> y) {
  const ClassCounts counts = class_counts(y);
  const auto n = static_cast<double>(counts.total);
  const auto c = static_cast<double>(counts.num_classes());
  std::map<int, double> per_class;
  for (const auto& [label, count] : counts.counts) {
    per_class[label] = n / (c * static_cast<double>(count));
  }
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = per_class[y[i]];
  return w;
}

double imbalance_ratio(const ClassCounts& counts) {
  if (counts.counts.empty()) throw ConfigError("imbalance_ratio: no classes");
  std::size_t lo = counts.counts.begin()->second;
  std::size_t hi = lo;
  for (const auto& [label, count] : counts.counts) {
    lo = std::min(lo, count);
    hi = std::max(hi, count);
  }
  if (lo == 0) throw ConfigError("imbalance_ratio: class with zero count");
  return static_cast<double>(hi) / static_cast<double>(lo);
}

void to_json(nlohmann::json& j, const ClassCounts& counts) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, count] : counts.counts) per_class[std::to_string(label)] = count;
  j = nlohmann::json{{"counts", per_class}, {"total", counts.total}};
}

void from_json(const nlohmann::json& j, ClassCounts& counts) {
  counts.counts.clear();
  for (const auto& [key, value] : j.at("counts").items()) {
    counts.counts[std::stoi(key)] = value.get<std::size_t>();
  }
  j.at("total").get_to(counts.total);
}

void to_json(nlohmann::json& j, const ResampleReport& r) {
  j = nlohmann::json{{"counts_before", r.counts_before}, {"counts_after", r.counts_after},
                     {"ir_before", r.ir_before},         {"ir_after", r.ir_after},
                     {"ir_improvement", r.ir_improvement}, {"synthetic_count", r.synthetic_count},
                     {"tomek_removed", r.tomek_removed}};
}

void from_json(const nlohmann::json& j, ResampleReport& r) {
  j.at("counts_before").get_to(r.counts_before);
  j.at("counts_after").get_to(r.counts_after);
  j.at("ir_before").get_to(r.ir_before);
  j.at("ir_after").get_to(r.ir_after);
  j.at("ir_improvement").get_to(r.ir_improvement);
  j.at("synthetic_count").get_to(r.synthetic_count);
  j.at("tomek_removed").get_to(r.tomek_removed);
}

void to_json(nlohmann::json& j, const Standardizer& s) {
  j = nlohmann::json{{"means", s.means}, {"scales", s.scales}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
  j.at("means").get_to(s.means);
  j.at("scales").get_to(s.scales);
}

}  // namespace wineqc
