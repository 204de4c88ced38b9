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

#include "wineqc/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>

#include "wineqc/data.hpp"
#include "wineqc/metrics.hpp"
#include "wineqc/split.hpp"

namespace wineqc {

void BoostConfig::validate() const {
  if (rounds < 1) throw ConfigError("boost: rounds must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("boost: learning_rate must be non-negative");
  }
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("boost: subsample must lie in (0, 1]");
  if (!(column_fraction > 0.0 && column_fraction <= 1.0)) {
    throw ConfigError("boost: column_fraction must lie in (0, 1]");
  }
  if (max_depth < 1) throw ConfigError("boost: max_depth must be at least 1");
  if (min_samples_leaf < 1) throw ConfigError("boost: min_samples_leaf must be at least 1");
  if (min_samples_split < 2) throw ConfigError("boost: min_samples_split must be at least 2");
  if (num_leaves < 2) throw ConfigError("boost: num_leaves must be at least 2");
  if (!(gamma >= 0.0) || !(lambda_reg >= 0.0) || !(alpha_reg >= 0.0) || !(min_child_weight >= 0.0)) {
    throw ConfigError("boost: gamma, lambda, alpha and min_child_weight must be non-negative");
  }
  if (!(bagging_temperature >= 0.0)) throw ConfigError("boost: bagging_temperature must be >= 0");
  if (bins < 2 || bins > 65535) throw ConfigError("boost: bins must lie in [2, 65535]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("boost: validation_fraction must lie in [0, 1)");
  }
  if (goss.enabled) {
    const double a = goss.top_rate;
    const double b = goss.other_rate;
    if (!(a > 0.0 && a <= 1.0) || !(b > 0.0) || (a < 1.0 && a + b > 1.0)) {
      throw ConfigError("boost: GOSS rates need 0 < a, 0 < b, a + b <= 1");
    }
  }
  if (max_features.kind == MaxFeatures::Kind::kFraction &&
      !(max_features.fraction > 0.0 && max_features.fraction <= 1.0)) {
    throw ConfigError("boost: max_features fraction must lie in (0, 1]");
  }
}

namespace {

void softmax_row(std::span<const double> raw, std::span<double> p) {
  const double top = *std::max_element(raw.begin(), raw.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < raw.size(); ++c) {
    p[c] = std::exp(raw[c] - top);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
}

}  // namespace

GradHess softmax_grad_hess(std::span<const int> y_index, const Matrix& raw,
                           std::span<const double> weights) {
  if (y_index.size() != raw.rows() || weights.size() != raw.rows()) {
    throw ConfigError("softmax_grad_hess: inputs differ in length");
  }
  const std::size_t c = raw.cols();
  GradHess out{Matrix(raw.rows(), c), Matrix(raw.rows(), c)};
  std::vector<double> p(c);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (double v : raw.row(i)) {
      if (std::isnan(v)) throw ConfigError("softmax_grad_hess: NaN score");
    }
    softmax_row(raw.row(i), p);
    for (std::size_t k = 0; k < c; ++k) {
      const double target = static_cast<int>(k) == y_index[i] ? 1.0 : 0.0;
      out.g(i, k) = weights[i] * (target - p[k]);
      out.h(i, k) = weights[i] * p[k] * (1.0 - p[k]);
    }
  }
  return out;
}

double softmax_deviance(std::span<const int> y_index, const Matrix& raw,
                        std::span<const double> weights) {
  double loss = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto row = raw.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    const double log_p = row[static_cast<std::size_t>(y_index[i])] - top - std::log(sum);
    loss -= weights[i] * log_p;
    total += weights[i];
  }
  return total > 0.0 ? loss / total : 0.0;
}

namespace {

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double score_term(double g, double h, double lambda, double alpha) {
  const double denom = h + lambda;
  if (denom <= 0.0) return 0.0;
  const double t = alpha > 0.0 ? soft_threshold(g, alpha) : g;
  return t * t / denom;
}

double regularized_gain(double g, double h, double gl, double hl, double gr, double hr,
                        double lambda, double alpha, double gamma) {
  return 0.5 * (score_term(gl, hl, lambda, alpha) + score_term(gr, hr, lambda, alpha) -
                score_term(g, h, lambda, alpha)) -
         gamma;
}

}  // namespace

double split_gain(double g, double h, double g_left, double h_left, double g_right,
                  double h_right, double lambda, double gamma) {
  if (lambda < 0.0) throw ConfigError("split_gain: lambda must be non-negative");
  return regularized_gain(g, h, g_left, h_left, g_right, h_right, lambda, 0.0, gamma);
}

double leaf_weight(double g, double h, double lambda, double alpha) {
  if (h + lambda == 0.0) {
    if (g == 0.0) return 0.0;
    throw ConfigError("leaf_weight: H + lambda is zero");
  }
  return -soft_threshold(g, alpha) / (h + lambda);
}

BinEdges fit_bins(const Matrix& x, std::size_t max_bins) {
  if (max_bins < 2) throw ConfigError("fit_bins: need at least two bins");
  BinEdges out;
  out.edges.resize(x.cols());
  std::vector<double> values(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) values[i] = x(i, f);
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double>& edges = out.edges[f];
    if (distinct.size() <= max_bins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        double mid = distinct[i] + 0.5 * (distinct[i + 1] - distinct[i]);
        if (mid <= distinct[i]) mid = distinct[i + 1];
        edges.push_back(mid);
      }
      continue;
    }
    const auto last = static_cast<double>(values.size() - 1);
    for (std::size_t q = 1; q < max_bins; ++q) {
      const double pos = last * static_cast<double>(q) / static_cast<double>(max_bins);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      edges.push_back(values[lo] + frac * (values[hi] - values[lo]));
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  return out;
}

BinnedMatrix bin_matrix(const BinEdges& edges, const Matrix& x) {
  if (x.cols() != edges.edges.size()) throw ConfigError("bin_matrix: column count mismatch");
  BinnedMatrix b;
  b.rows = x.rows();
  b.cols = x.cols();
  b.bins.resize(b.rows * b.cols);
  b.num_bins.resize(b.cols);
  b.offsets.resize(b.cols);
  std::size_t offset = 0;
  for (std::size_t f = 0; f < b.cols; ++f) {
    const auto& e = edges.edges[f];
    b.num_bins[f] = e.size() + 1;
    b.offsets[f] = offset;
    offset += b.num_bins[f];
    for (std::size_t i = 0; i < b.rows; ++i) {
      b.bins[f * b.rows + i] =
          static_cast<std::uint16_t>(std::upper_bound(e.begin(), e.end(), x(i, f)) - e.begin());
    }
  }
  return b;
}

GossSample goss_sample(std::span<const double> grad_norms, double top_rate, double other_rate,
                       std::uint64_t seed) {
  if (!(top_rate > 0.0 && top_rate <= 1.0) || !(other_rate > 0.0) ||
      (top_rate < 1.0 && top_rate + other_rate > 1.0)) {
    throw ConfigError("goss_sample: need 0 < a, 0 < b, a + b <= 1");
  }
  const std::size_t n = grad_norms.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return grad_norms[a] > grad_norms[b];
  });
  const auto top = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(top_rate * static_cast<double>(n) - 1e-9)));
  std::vector<std::uint32_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  const auto other = std::min<std::size_t>(
      rest.size(), static_cast<std::size_t>(std::ceil(other_rate * static_cast<double>(n) - 1e-9)));
  Rng rng(seed);
  // Partial Fisher-Yates: the first `other` slots become a uniform sample.
  for (std::size_t i = 0; i < other; ++i) {
    std::swap(rest[i], rest[i + uniform_index(rng, rest.size() - i)]);
  }
  const double amplify = (1.0 - top_rate) / other_rate;
  std::vector<std::pair<std::uint32_t, double>> picked;
  picked.reserve(top + other);
  for (std::size_t i = 0; i < top; ++i) picked.emplace_back(order[i], 1.0);
  for (std::size_t i = 0; i < other; ++i) picked.emplace_back(rest[i], amplify);
  std::sort(picked.begin(), picked.end());
  GossSample out;
  for (const auto& [index, mult] : picked) {
    out.indices.push_back(index);
    out.multipliers.push_back(mult);
  }
  return out;
}

double RegTree::predict(std::span<const double> x) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const RegNode& n = nodes[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
  }
  return nodes[node].value;
}

std::size_t RegTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const RegNode& n) { return n.is_leaf(); }));
}

std::size_t RegTree::depth() const {
  std::vector<std::size_t> depth_of(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

namespace {

// Scans one feature's bins for the best boundary. With `pick` set, only that
// boundary is considered.
void scan_feature(const BinnedMatrix& binned, std::span<const HistBin> hist, std::size_t f,
                  const SplitConstraints& k, double g, double h, std::size_t n,
                  SplitCandidate& best, std::size_t pick = std::numeric_limits<std::size_t>::max()) {
  const std::size_t nb = binned.num_bins[f];
  const HistBin* slice = hist.data() + binned.offsets[f];
  double gl = 0.0;
  double hl = 0.0;
  std::size_t nl = 0;
  for (std::size_t b = 0; b + 1 < nb; ++b) {
    gl += slice[b].grad;
    hl += slice[b].hess;
    nl += slice[b].count;
    if (pick != std::numeric_limits<std::size_t>::max() && b != pick) continue;
    const std::size_t nr = n - nl;
    if (nl < k.min_samples_leaf || nr < k.min_samples_leaf) continue;
    const double gr = g - gl;
    const double hr = h - hl;
    if (hl < k.min_child_weight || hr < k.min_child_weight) continue;
    const double gain = regularized_gain(g, h, gl, hl, gr, hr, k.lambda, k.alpha, k.gamma);
    if (gain > best.gain) {
      best.feature = static_cast<int>(f);
      best.bin = b;
      best.gain = gain;
      best.g_left = gl;
      best.h_left = hl;
      best.g_right = gr;
      best.h_right = hr;
      best.n_left = nl;
      best.n_right = nr;
    }
  }
}

struct NodeTotals {
  double g = 0.0;
  double h = 0.0;
  std::size_t n = 0;
};

NodeTotals totals_of(const BinnedMatrix& binned, std::span<const HistBin> hist, std::size_t f) {
  NodeTotals t;
  const HistBin* slice = hist.data() + binned.offsets[f];
  for (std::size_t b = 0; b < binned.num_bins[f]; ++b) {
    t.g += slice[b].grad;
    t.h += slice[b].hess;
    t.n += slice[b].count;
  }
  return t;
}

SplitCandidate find_split(const BinnedMatrix& binned, std::span<const HistBin> hist,
                          std::span<const std::size_t> features, const SplitConstraints& k,
                          const NodeTotals& totals, Rng* extra) {
  SplitCandidate best;
  best.gain = 0.0;  // only strictly positive gains split
  for (std::size_t f : features) {
    if (extra == nullptr) {
      scan_feature(binned, hist, f, k, totals.g, totals.h, totals.n, best);
      continue;
    }
    const HistBin* slice = hist.data() + binned.offsets[f];
    std::size_t lo = binned.num_bins[f];
    std::size_t hi = 0;
    for (std::size_t b = 0; b < binned.num_bins[f]; ++b) {
      if (slice[b].count == 0) continue;
      lo = std::min(lo, b);
      hi = b;
    }
    if (lo >= hi) continue;
    const std::size_t pick = lo + uniform_index(*extra, hi - lo);
    scan_feature(binned, hist, f, k, totals.g, totals.h, totals.n, best, pick);
  }
  return best;
}

}  // namespace

SplitCandidate best_histogram_split(const BinnedMatrix& binned, std::span<const HistBin> hist,
                                    std::span<const std::size_t> features,
                                    const SplitConstraints& constraints) {
  if (features.empty()) return {};
  const NodeTotals totals = totals_of(binned, hist, features.front());
  return find_split(binned, hist, features, constraints, totals, nullptr);
}

Matrix BoostModel::predict_raw(const Matrix& x) const {
  if (x.cols() != num_features) {
    throw ConfigError("predict: expected " + std::to_string(num_features) + " columns");
  }
  const std::size_t c = class_vocab.size();
  Matrix out(x.rows(), c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t k = 0; k < c; ++k) row[k] = base_scores[k];
    for (const auto& trees : rounds) {
      for (std::size_t k = 0; k < c; ++k) row[k] += learning_rate * trees[k].predict(x.row(i));
    }
  }
  return out;
}

Matrix BoostModel::predict_proba(const Matrix& x) const {
  Matrix raw = predict_raw(x);
  std::vector<double> p(raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    softmax_row(raw.row(i), p);
    std::copy(p.begin(), p.end(), raw.row(i).begin());
  }
  return raw;
}

namespace {

std::vector<int> dense_labels(std::span<const int> y, std::span<const int> vocab) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(vocab.begin(), vocab.end(), y[i]) - vocab.begin());
  }
  return out;
}

double threshold_below(double edge) {
  return std::nextafter(edge, -std::numeric_limits<double>::infinity());
}

std::vector<std::size_t> sample_columns(std::size_t d, double fraction, Rng& rng) {
  std::vector<std::size_t> cols(d);
  std::iota(cols.begin(), cols.end(), 0);
  if (fraction >= 1.0) return cols;
  const std::size_t m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(d))), 1, d);
  shuffle(cols, rng);
  cols.resize(m);
  std::sort(cols.begin(), cols.end());
  return cols;
}

// Rows and per-row gradient/hessian multipliers for one round.
struct RoundSample {
  std::vector<std::uint32_t> rows;
  std::vector<double> scale;  // per fit row; 0 for rows outside the sample
};

// Training state shared by both boosters: fit/validation partition, running
// raw scores, round log and early stopping.
class BoostDriver {
 public:
  BoostDriver(const Matrix& x, std::span<const int> y, std::span<const double> w,
              const BoostConfig& config, std::string kind)
      : config_(config) {
    config.validate();
    if (x.rows() == 0) throw ConfigError("boost: empty training set");
    if (y.size() != x.rows() || w.size() != x.rows()) {
      throw ConfigError("boost: X, y and weights differ in length");
    }
    for (double v : w) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("boost: weights must be positive");
    }
    model_.kind = std::move(kind);
    model_.class_vocab = vocabulary_of(y);
    if (model_.class_vocab.size() < 2) throw ConfigError("boost: need at least two classes");
    model_.num_features = x.cols();
    model_.learning_rate = config.learning_rate;
    model_.gain.assign(x.cols(), 0.0);
    c_ = model_.class_vocab.size();

    const std::vector<int> dense = dense_labels(y, model_.class_vocab);
    std::vector<std::size_t> fit_rows(x.rows());
    std::iota(fit_rows.begin(), fit_rows.end(), 0);
    std::vector<std::size_t> val_rows;
    if (config.early_stopping_rounds > 0 && config.validation_fraction > 0.0) {
      HoldoutSplit split =
          stratified_holdout(y, config.validation_fraction, derive_seed(config.seed, 0xE5));
      if (!split.test_indices.empty() && !split.train_indices.empty()) {
        fit_rows = std::move(split.train_indices);
        val_rows = std::move(split.test_indices);
      }
    }
    x_fit_ = x.select_rows(fit_rows);
    for (std::size_t i : fit_rows) {
      y_fit_.push_back(dense[i]);
      w_fit_.push_back(w[i]);
    }
    if (!val_rows.empty()) {
      x_val_ = x.select_rows(val_rows);
      for (std::size_t i : val_rows) y_val_.push_back(model_.class_vocab[static_cast<std::size_t>(dense[i])]);
    }

    std::vector<double> prior(c_, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < y_fit_.size(); ++i) {
      prior[static_cast<std::size_t>(y_fit_[i])] += w_fit_[i];
      total += w_fit_[i];
    }
    model_.base_scores.resize(c_);
    for (std::size_t k = 0; k < c_; ++k) {
      model_.base_scores[k] = std::log(std::max(prior[k] / total, 1e-12));
    }
    raw_fit_ = Matrix(x_fit_.rows(), c_);
    for (std::size_t i = 0; i < raw_fit_.rows(); ++i) {
      std::copy(model_.base_scores.begin(), model_.base_scores.end(), raw_fit_.row(i).begin());
    }
    raw_val_ = Matrix(x_val_.rows(), c_);
    for (std::size_t i = 0; i < raw_val_.rows(); ++i) {
      std::copy(model_.base_scores.begin(), model_.base_scores.end(), raw_val_.row(i).begin());
    }
  }

  const Matrix& x_fit() const { return x_fit_; }
  std::span<const int> y_fit() const { return y_fit_; }
  std::span<const double> w_fit() const { return w_fit_; }
  std::size_t num_classes() const { return c_; }

  GradHess gradients() const { return softmax_grad_hess(y_fit_, raw_fit_, w_fit_); }

  RoundSample sample_rows(std::size_t round, const GradHess& gh) const {
    const std::size_t n = x_fit_.rows();
    RoundSample s;
    s.scale.assign(n, 0.0);
    Rng rng(derive_seed(config_.seed, round, 0x5A));
    if (config_.goss.enabled) {
      std::vector<double> norms(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < c_; ++k) norms[i] += std::abs(gh.g(i, k));
      }
      GossSample g = goss_sample(norms, config_.goss.top_rate, config_.goss.other_rate,
                                 derive_seed(config_.seed, round, 0x60));
      s.rows = std::move(g.indices);
      for (std::size_t t = 0; t < s.rows.size(); ++t) s.scale[s.rows[t]] = g.multipliers[t];
    } else if (config_.subsample < 1.0) {
      const std::size_t m = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(config_.subsample * static_cast<double>(n))), 1, n);
      std::vector<std::uint32_t> all(n);
      std::iota(all.begin(), all.end(), 0U);
      for (std::size_t i = 0; i < m; ++i) std::swap(all[i], all[i + uniform_index(rng, n - i)]);
      all.resize(m);
      std::sort(all.begin(), all.end());
      s.rows = std::move(all);
      for (std::uint32_t r : s.rows) s.scale[r] = 1.0;
    } else {
      s.rows.resize(n);
      std::iota(s.rows.begin(), s.rows.end(), 0U);
      std::fill(s.scale.begin(), s.scale.end(), 1.0);
    }
    if (config_.bagging_temperature > 0.0) {
      for (std::uint32_t r : s.rows) {
        double u = uniform01(rng);
        if (u <= 0.0) u = 0x1.0p-53;
        s.scale[r] *= std::pow(-std::log(u), config_.bagging_temperature);
      }
    }
    return s;
  }

  /// Adds one round of trees; returns true when training should stop.
  bool commit(std::vector<RegTree> trees) {
    const double nu = config_.learning_rate;
    for (std::size_t i = 0; i < raw_fit_.rows(); ++i) {
      for (std::size_t k = 0; k < c_; ++k) raw_fit_(i, k) += nu * trees[k].predict(x_fit_.row(i));
    }
    for (std::size_t i = 0; i < raw_val_.rows(); ++i) {
      for (std::size_t k = 0; k < c_; ++k) raw_val_(i, k) += nu * trees[k].predict(x_val_.row(i));
    }
    model_.rounds.push_back(std::move(trees));
    const std::size_t round = model_.rounds.size() - 1;

    RoundLog entry;
    entry.round = round;
    entry.train_loss = softmax_deviance(y_fit_, raw_fit_, w_fit_);
    entry.validation_weighted_f1 = std::numeric_limits<double>::quiet_NaN();
    bool stop = false;
    if (!y_val_.empty()) {
      const std::vector<int> pred = argmax_labels(raw_val_, model_.class_vocab);
      entry.validation_weighted_f1 = weighted_f1(y_val_, pred, model_.class_vocab);
      if (round == 0 || entry.validation_weighted_f1 > best_score_) {
        best_score_ = entry.validation_weighted_f1;
        model_.best_iteration = round;
      } else if (round - model_.best_iteration >= config_.early_stopping_rounds) {
        stop = true;
      }
    } else {
      model_.best_iteration = round;
    }
    model_.log.push_back(entry);
    return stop;
  }

  BoostModel finish() {
    model_.rounds.resize(model_.best_iteration + 1);
    // Gain from truncated rounds is dropped with them.
    model_.gain.assign(model_.num_features, 0.0);
    for (std::size_t f = 0; f < model_.num_features; ++f) {
      model_.gain[f] = round_gain_prefix(f);
    }
    return std::move(model_);
  }

  void record_round_gain(std::span<const std::vector<double>> gains) {
    std::vector<double> total(model_.num_features, 0.0);
    for (const auto& g : gains) {
      for (std::size_t f = 0; f < g.size(); ++f) total[f] += g[f];
    }
    round_gains_.push_back(std::move(total));
  }

 private:
  double round_gain_prefix(std::size_t f) const {
    double sum = 0.0;
    for (std::size_t r = 0; r <= model_.best_iteration && r < round_gains_.size(); ++r) {
      sum += round_gains_[r][f];
    }
    return sum;
  }

  const BoostConfig& config_;
  BoostModel model_;
  std::size_t c_ = 0;
  Matrix x_fit_, x_val_;
  std::vector<int> y_fit_;
  std::vector<double> w_fit_;
  std::vector<int> y_val_;  // raw labels
  Matrix raw_fit_, raw_val_;
  double best_score_ = -1.0;
  std::vector<std::vector<double>> round_gains_;
};

// ---------------------------------------------------------------------------
// First-order trees: exact least-squares splits found by one sorted pass per
// feature and level over all open nodes at once.

class ExactTreeBuilder {
 public:
  ExactTreeBuilder(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                   const BoostConfig& config)
      : x_(x), order_(order), config_(config) {}

  RegTree build(std::span<const std::uint32_t> rows, std::span<const double> g,
                std::span<const double> h, std::span<const double> w, double leaf_scale,
                std::uint64_t seed, std::vector<double>& gain) {
    const std::size_t n = x_.rows();
    const std::size_t d = x_.cols();
    const std::size_t m = config_.max_features.resolve(d);
    Rng rng(seed);
    RegTree tree;
    tree.nodes.emplace_back();
    std::vector<int> node_of(n, -1);
    for (std::uint32_t r : rows) node_of[r] = 0;

    struct Stats {
      double s = 0.0, wsum = 0.0, hsum = 0.0;
      std::size_t count = 0;
    };
    std::vector<Stats> stats(1);
    for (std::uint32_t r : rows) {
      stats[0].s += g[r];
      stats[0].wsum += w[r];
      stats[0].hsum += h[r];
      ++stats[0].count;
    }

    std::vector<int> open{0};
    for (std::size_t depth = 0; !open.empty(); ++depth) {
      // Decide which open nodes may split and sample their features.
      std::vector<int> splittable;
      for (int nd : open) {
        const Stats& st = stats[static_cast<std::size_t>(nd)];
        if (depth < config_.max_depth && st.count >= config_.min_samples_split &&
            st.count >= 2 * config_.min_samples_leaf) {
          splittable.push_back(nd);
        } else {
          make_leaf(tree, nd, st.s, st.hsum, leaf_scale);
        }
      }
      if (splittable.empty()) break;

      const std::size_t nodes = tree.nodes.size();
      std::vector<char> active(nodes, 0);
      std::vector<std::vector<char>> allowed(nodes);
      for (int nd : splittable) {
        active[static_cast<std::size_t>(nd)] = 1;
        std::vector<std::size_t> feats(d);
        std::iota(feats.begin(), feats.end(), 0);
        std::vector<char> mask(d, m >= d ? 1 : 0);
        if (m < d) {
          for (std::size_t i = 0; i < m; ++i) {
            std::swap(feats[i], feats[i + uniform_index(rng, d - i)]);
            mask[feats[i]] = 1;
          }
        }
        allowed[static_cast<std::size_t>(nd)] = std::move(mask);
      }

      struct Best {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
      };
      std::vector<Best> best(nodes);
      struct Scan {
        double s = 0.0, wsum = 0.0, prev = 0.0;
        std::size_t count = 0;
      };
      std::vector<Scan> scan(nodes);
      for (std::size_t f = 0; f < d; ++f) {
        std::fill(scan.begin(), scan.end(), Scan{});
        for (std::uint32_t r : order_[f]) {
          const int nd = node_of[r];
          if (nd < 0) continue;
          const auto ni = static_cast<std::size_t>(nd);
          if (!active[ni] || !allowed[ni][f]) continue;
          Scan& sc = scan[ni];
          const double v = x_(r, f);
          if (sc.count > 0 && v != sc.prev) {
            const Stats& st = stats[ni];
            const std::size_t right = st.count - sc.count;
            if (sc.count >= config_.min_samples_leaf && right >= config_.min_samples_leaf) {
              const double sr = st.s - sc.s;
              const double wr = st.wsum - sc.wsum;
              const double gain =
                  sc.s * sc.s / sc.wsum + sr * sr / wr - st.s * st.s / st.wsum;
              if (gain > best[ni].gain) {
                double thr = 0.5 * (sc.prev + v);
                if (thr >= v) thr = sc.prev;
                best[ni] = {static_cast<int>(f), thr, gain};
              }
            }
          }
          sc.s += g[r];
          sc.wsum += w[r];
          ++sc.count;
          sc.prev = v;
        }
      }

      std::vector<int> next;
      for (int nd : splittable) {
        const auto ni = static_cast<std::size_t>(nd);
        const Stats st = stats[ni];
        if (best[ni].feature < 0) {
          make_leaf(tree, nd, st.s, st.hsum, leaf_scale);
          continue;
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        RegNode& node = tree.nodes[ni];
        node.feature = best[ni].feature;
        node.threshold = best[ni].threshold;
        node.left = left;
        node.right = left + 1;
        gain[static_cast<std::size_t>(best[ni].feature)] += best[ni].gain;
        next.push_back(left);
        next.push_back(left + 1);
      }
      for (std::uint32_t r : rows) {
        const int nd = node_of[r];
        if (nd < 0) continue;
        const RegNode& node = tree.nodes[static_cast<std::size_t>(nd)];
        if (node.is_leaf()) {
          node_of[r] = -1;
          continue;
        }
        const int child = x_(r, static_cast<std::size_t>(node.feature)) <= node.threshold
                              ? node.left
                              : node.right;
        node_of[r] = child;
        Stats& st = stats[static_cast<std::size_t>(child)];
        st.s += g[r];
        st.wsum += w[r];
        st.hsum += h[r];
        ++st.count;
      }
      open = std::move(next);
    }
    return tree;
  }

 private:
  static void make_leaf(RegTree& tree, int nd, double s, double hsum, double leaf_scale) {
    RegNode& node = tree.nodes[static_cast<std::size_t>(nd)];
    node.feature = -1;
    node.value = hsum > 1e-150 ? leaf_scale * s / hsum : 0.0;
  }

  const Matrix& x_;
  const std::vector<std::vector<std::uint32_t>>& order_;
  const BoostConfig& config_;
};

// ---------------------------------------------------------------------------
// Second-order histogram trees.

class HistTreeBuilder {
 public:
  HistTreeBuilder(const BinnedMatrix& binned, const BinEdges& edges, const BoostConfig& config)
      : binned_(binned), edges_(edges), config_(config) {
    constraints_.lambda = config.lambda_reg;
    constraints_.gamma = config.gamma;
    constraints_.alpha = config.alpha_reg;
    constraints_.min_child_weight = config.min_child_weight;
    constraints_.min_samples_leaf = config.min_samples_leaf;
    if (config.growth == Growth::kOblivious) {
      auto order = std::make_shared<std::vector<std::vector<std::uint32_t>>>(binned.cols);
      for (std::size_t f = 0; f < binned.cols; ++f) {
        auto& rows = (*order)[f];
        rows.resize(binned.rows);
        std::iota(rows.begin(), rows.end(), 0U);
        std::stable_sort(rows.begin(), rows.end(), [&](std::uint32_t a, std::uint32_t b) {
          return binned.at(a, f) < binned.at(b, f);
        });
      }
      bin_order_ = std::move(order);
    }
  }

  RegTree build(std::vector<std::uint32_t> rows, std::span<const double> grad,
                std::span<const double> hess, std::span<const std::size_t> features,
                std::uint64_t seed, std::vector<double>& gain) {
    grad_ = grad;
    hess_ = hess;
    features_ = features;
    rng_.seed(seed);
    gain_ = &gain;
    RegTree tree;
    tree.nodes.emplace_back();
    Leaf root;
    root.node = 0;
    root.rows = std::move(rows);
    root.hist.assign(binned_.total_bins(), HistBin{});
    build_hist(root);
    root.totals = totals_of(binned_, root.hist, features_.front());
    switch (config_.growth) {
      case Growth::kLevel: grow_level(tree, std::move(root)); break;
      case Growth::kLeafWise: grow_leaf_wise(tree, std::move(root)); break;
      case Growth::kOblivious: grow_oblivious(tree, std::move(root)); break;
    }
    return tree;
  }

 private:
  struct Leaf {
    int node = 0;
    std::size_t depth = 0;
    std::vector<std::uint32_t> rows;
    std::vector<HistBin> hist;
    NodeTotals totals;
    SplitCandidate split;
  };

  void build_hist(Leaf& leaf) const {
    kernels::build_histogram(binned_, leaf.rows, grad_, hess_, features_, leaf.hist,
                             ExecPolicy::kSerial);
  }

  void set_leaf_value(RegTree& tree, const Leaf& leaf) const {
    RegNode& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
    node.feature = -1;
    node.value = leaf_weight(leaf.totals.g, leaf.totals.h, config_.lambda_reg, config_.alpha_reg);
  }

  SplitCandidate evaluate(const Leaf& leaf) {
    if (leaf.totals.n < 2 * config_.min_samples_leaf) return {};
    return find_split(binned_, leaf.hist, features_, constraints_, leaf.totals,
                      config_.extra_trees ? &rng_ : nullptr);
  }

  // Splits `parent` by (feature, bin); the smaller child's histogram is built
  // from rows, the larger one by subtraction.
  std::pair<Leaf, Leaf> split_leaf(RegTree& tree, Leaf& parent, std::size_t feature,
                                   std::size_t bin) {
    Leaf left;
    Leaf right;
    left.depth = right.depth = parent.depth + 1;
    for (std::uint32_t r : parent.rows) {
      (binned_.at(r, feature) <= bin ? left.rows : right.rows).push_back(r);
    }
    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    RegNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
    node.feature = static_cast<int>(feature);
    node.threshold = threshold_below(edges_.edges[feature][bin]);
    node.left = left_id;
    node.right = left_id + 1;
    left.node = left_id;
    right.node = left_id + 1;

    Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
    Leaf& large = left.rows.size() <= right.rows.size() ? right : left;
    small.hist.assign(binned_.total_bins(), HistBin{});
    build_hist(small);
    large.hist = std::move(parent.hist);
    for (std::size_t f : features_) {
      const std::size_t off = binned_.offsets[f];
      for (std::size_t b = 0; b < binned_.num_bins[f]; ++b) {
        HistBin& dst = large.hist[off + b];
        const HistBin& src = small.hist[off + b];
        dst.grad -= src.grad;
        dst.hess -= src.hess;
        dst.count -= src.count;
      }
    }
    parent.rows.clear();
    parent.rows.shrink_to_fit();
    left.totals = totals_of(binned_, left.hist, features_.front());
    right.totals = totals_of(binned_, right.hist, features_.front());
    return {std::move(left), std::move(right)};
  }

  void grow_level(RegTree& tree, Leaf root) {
    std::vector<Leaf> level;
    level.push_back(std::move(root));
    while (!level.empty()) {
      std::vector<Leaf> next;
      for (Leaf& leaf : level) {
        SplitCandidate s;
        if (leaf.depth < config_.max_depth) s = evaluate(leaf);
        if (!s.valid()) {
          set_leaf_value(tree, leaf);
          continue;
        }
        (*gain_)[static_cast<std::size_t>(s.feature)] += s.gain + config_.gamma;
        auto [l, r] = split_leaf(tree, leaf, static_cast<std::size_t>(s.feature), s.bin);
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
      level = std::move(next);
    }
  }

  void grow_leaf_wise(RegTree& tree, Leaf root) {
    std::vector<Leaf> leaves;
    root.split = root.depth < config_.max_depth ? evaluate(root) : SplitCandidate{};
    leaves.push_back(std::move(root));
    std::size_t count = 1;
    while (count < config_.num_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].split.valid()) continue;
        if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain) pick = i;
      }
      if (pick == leaves.size()) break;
      Leaf parent = std::move(leaves[pick]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
      const SplitCandidate s = parent.split;
      (*gain_)[static_cast<std::size_t>(s.feature)] += s.gain + config_.gamma;
      auto [l, r] = split_leaf(tree, parent, static_cast<std::size_t>(s.feature), s.bin);
      l.split = l.depth < config_.max_depth ? evaluate(l) : SplitCandidate{};
      r.split = r.depth < config_.max_depth ? evaluate(r) : SplitCandidate{};
      leaves.push_back(std::move(l));
      leaves.push_back(std::move(r));
      ++count;
    }
    for (const Leaf& leaf : leaves) set_leaf_value(tree, leaf);
  }

  // One (feature, bin) rule per level, chosen by the summed gain over all
  // nodes of the level. Empty nodes contribute nothing. Deep levels hold far
  // more nodes than rows per node, so instead of per-node histograms each
  // feature is walked once in bin order and every node's piecewise-constant
  // gain is added to a per-bin difference array.
  void grow_oblivious(RegTree& tree, Leaf root) {
    const auto& bin_order = *bin_order_;
    std::vector<int> node_of(binned_.rows, -1);
    for (std::uint32_t r : root.rows) node_of[r] = 0;
    std::vector<int> ids{root.node};
    std::vector<double> g{root.totals.g};
    std::vector<double> h{root.totals.h};
    root.hist.clear();

    std::vector<std::pair<std::size_t, std::size_t>> used;
    std::vector<double> diff, gl, hl;
    std::vector<int> last;
    for (std::size_t depth = 0; depth < config_.max_depth; ++depth) {
      const std::size_t nodes = ids.size();
      double best_gain = -std::numeric_limits<double>::infinity();
      std::size_t best_f = 0;
      std::size_t best_b = 0;
      bool found = false;
      for (std::size_t f : features_) {
        const std::size_t nb = binned_.num_bins[f];
        if (nb < 2) continue;
        diff.assign(nb, 0.0);
        gl.assign(nodes, 0.0);
        hl.assign(nodes, 0.0);
        last.assign(nodes, -1);
        for (std::uint32_t r : bin_order[f]) {
          const int k = node_of[r];
          if (k < 0) continue;
          const auto ki = static_cast<std::size_t>(k);
          const int b = binned_.at(r, f);
          if (last[ki] >= 0 && b != last[ki]) {
            const double v =
                regularized_gain(g[ki], h[ki], gl[ki], hl[ki], g[ki] - gl[ki], h[ki] - hl[ki],
                                 config_.lambda_reg, config_.alpha_reg, 0.0);
            diff[static_cast<std::size_t>(last[ki])] += v;
            diff[static_cast<std::size_t>(b)] -= v;
          }
          gl[ki] += grad_[r];
          hl[ki] += hess_[r];
          last[ki] = b;
        }
        double total = 0.0;
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          total += diff[b];
          if (std::find(used.begin(), used.end(), std::pair{f, b}) != used.end()) continue;
          if (!found || total > best_gain) {
            best_gain = total;
            best_f = f;
            best_b = b;
            found = true;
          }
        }
      }
      if (!found) break;
      used.emplace_back(best_f, best_b);
      if (best_gain > 0.0) (*gain_)[best_f] += best_gain;

      std::vector<int> next_ids(2 * nodes);
      for (std::size_t k = 0; k < nodes; ++k) {
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        RegNode& parent = tree.nodes[static_cast<std::size_t>(ids[k])];
        parent.feature = static_cast<int>(best_f);
        parent.threshold = threshold_below(edges_.edges[best_f][best_b]);
        parent.left = left;
        parent.right = left + 1;
        next_ids[2 * k] = left;
        next_ids[2 * k + 1] = left + 1;
      }
      std::vector<double> next_g(2 * nodes, 0.0);
      std::vector<double> next_h(2 * nodes, 0.0);
      for (std::uint32_t r = 0; r < binned_.rows; ++r) {
        if (node_of[r] < 0) continue;
        const int child = 2 * node_of[r] + (binned_.at(r, best_f) <= best_b ? 0 : 1);
        node_of[r] = child;
        next_g[static_cast<std::size_t>(child)] += grad_[r];
        next_h[static_cast<std::size_t>(child)] += hess_[r];
      }
      ids = std::move(next_ids);
      g = std::move(next_g);
      h = std::move(next_h);
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
      RegNode& leaf = tree.nodes[static_cast<std::size_t>(ids[k])];
      leaf.feature = -1;
      leaf.value = leaf_weight(g[k], h[k], config_.lambda_reg, config_.alpha_reg);
    }
  }

  const BinnedMatrix& binned_;
  // Rows sorted by bin per feature; shared by copies of one builder.
  std::shared_ptr<const std::vector<std::vector<std::uint32_t>>> bin_order_;
  const BinEdges& edges_;
  const BoostConfig& config_;
  SplitConstraints constraints_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::span<const std::size_t> features_;
  Rng rng_;
  std::vector<double>* gain_ = nullptr;
};

ExecPolicy class_policy(const BoostConfig& config) { return config.policy; }

}  // namespace

BoostModel fit_gbm_first_order(const Matrix& x, std::span<const int> y,
                               std::span<const double> weights, const BoostConfig& config) {
  BoostDriver driver(x, y, weights, config, "gbdt_first_order");
  const Matrix& xf = driver.x_fit();
  const std::size_t n = xf.rows();
  const std::size_t d = xf.cols();
  const std::size_t c = driver.num_classes();
  const double leaf_scale = static_cast<double>(c - 1) / static_cast<double>(c);

  std::vector<std::vector<std::uint32_t>> order(d, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < d; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0U);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) { return xf(a, f) < xf(b, f); });
  }
  ExactTreeBuilder builder(xf, order, config);

  for (std::size_t round = 0; round < config.rounds; ++round) {
    const GradHess gh = driver.gradients();
    const RoundSample sample = driver.sample_rows(round, gh);
    std::vector<RegTree> trees(c);
    std::vector<std::vector<double>> gains(c, std::vector<double>(d, 0.0));
    kernels::for_each_index(c, class_policy(config), [&](std::size_t k) {
      std::vector<double> g(n), h(n);
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = gh.g(i, k);
        h[i] = gh.h(i, k);
      }
      trees[k] = builder.build(sample.rows, g, h, driver.w_fit(), leaf_scale,
                               derive_seed(config.seed, round, k, 0x71), gains[k]);
    });
    driver.record_round_gain(gains);
    if (driver.commit(std::move(trees))) break;
  }
  return driver.finish();
}

BoostModel fit_gbm_second_order(const Matrix& x, std::span<const int> y,
                                std::span<const double> weights, const BoostConfig& config) {
  BoostDriver driver(x, y, weights, config, "gbdt_second_order");
  const Matrix& xf = driver.x_fit();
  const std::size_t n = xf.rows();
  const std::size_t d = xf.cols();
  const std::size_t c = driver.num_classes();
  const BinEdges edges = fit_bins(xf, config.bins);
  const BinnedMatrix binned = bin_matrix(edges, xf);
  HistTreeBuilder proto(binned, edges, config);

  for (std::size_t round = 0; round < config.rounds; ++round) {
    const GradHess gh = driver.gradients();
    const RoundSample sample = driver.sample_rows(round, gh);
    std::vector<RegTree> trees(c);
    std::vector<std::vector<double>> gains(c, std::vector<double>(d, 0.0));
    kernels::for_each_index(c, class_policy(config), [&](std::size_t k) {
      Rng col_rng(derive_seed(config.seed, round, k, 0x72));
      const std::vector<std::size_t> features = sample_columns(d, config.column_fraction, col_rng);
      std::vector<double> grad(n), hess(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Histograms hold the loss gradient, i.e. the negated g.
        grad[i] = -gh.g(i, k) * sample.scale[i];
        hess[i] = gh.h(i, k) * sample.scale[i];
      }
      HistTreeBuilder builder = proto;
      trees[k] = builder.build(sample.rows, grad, hess, features,
                               derive_seed(config.seed, round, k, 0x73), gains[k]);
    });
    driver.record_round_gain(gains);
    if (driver.commit(std::move(trees))) break;
  }
  return driver.finish();
}

std::vector<double> gain_importance(const BoostModel& model) {
  std::vector<double> out = model.gain;
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0) {
    for (double& v : out) v /= total;
  } else if (!out.empty()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
  return out;
}

void write_round_log(std::ostream& out, const BoostModel& model) {
  out << "round,train_loss,validation_weighted_f1\n";
  for (const RoundLog& e : model.log) {
    out << e.round << ',' << e.train_loss << ',';
    if (!std::isnan(e.validation_weighted_f1)) out << e.validation_weighted_f1;
    out << '\n';
  }
}

double ordered_target_statistic(std::span<const std::pair<int, double>> prior_pairs,
                                int query_category, double a, double prior) {
  if (!(a > 0.0)) throw ConfigError("ordered_target_statistic: a must be positive");
  double sum = 0.0;
  double count = 0.0;
  for (const auto& [category, target] : prior_pairs) {
    if (category != query_category) continue;
    sum += target;
    count += 1.0;
  }
  return (sum + a * prior) / (count + a);
}

std::vector<double> ordered_target_encode(std::span<const int> categories,
                                          std::span<const double> targets, double a,
                                          double prior) {
  if (categories.size() != targets.size()) {
    throw ConfigError("ordered_target_encode: inputs differ in length");
  }
  if (!(a > 0.0)) throw ConfigError("ordered_target_encode: a must be positive");
  std::map<int, std::pair<double, double>> running;  // category -> (sum, count)
  std::vector<double> out(categories.size());
  for (std::size_t i = 0; i < categories.size(); ++i) {
    auto& [sum, count] = running[categories[i]];
    out[i] = (sum + a * prior) / (count + a);
    sum += targets[i];
    count += 1.0;
  }
  return out;
}

nlohmann::json boost_to_json(const BoostModel& model) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& trees : model.rounds) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const RegTree& tree : trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const RegNode& n : tree.nodes) {
        if (n.is_leaf()) {
          nodes.push_back({{"leaf", true}, {"value", n.value}});
        } else {
          nodes.push_back({{"leaf", false},
                           {"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
        }
      }
      per_class.push_back(nodes);
    }
    rounds.push_back(per_class);
  }
  return {{"kind", model.kind},
          {"class_vocab", model.class_vocab},
          {"base_scores", model.base_scores},
          {"learning_rate", model.learning_rate},
          {"best_iteration", model.best_iteration},
          {"gain", model.gain},
          {"rounds", rounds}};
}

}  // namespace wineqc
