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
// Brute-force reimplementations used as test oracles. Everything here is
// written from the textbook definitions with plain loops and shares no code
// with the library beyond the Matrix container.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "wineqc/common.hpp"
#include "wineqc/kernels.hpp"

namespace wineqc::oracle {

inline double f1_of(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

struct ClassTally {
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
};

inline ClassTally tally(std::span<const int> y, std::span<const int> yhat, int c) {
  ClassTally t;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == c) ++t.support;
    if (y[i] == c && yhat[i] == c) ++t.tp;
    if (y[i] != c && yhat[i] == c) ++t.fp;
    if (y[i] == c && yhat[i] != c) ++t.fn;
  }
  return t;
}

inline double accuracy(std::span<const int> y, std::span<const int> yhat) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += y[i] == yhat[i];
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

inline double weighted_f1(std::span<const int> y, std::span<const int> yhat,
                          std::span<const int> vocab) {
  double sum = 0.0;
  for (int c : vocab) {
    const ClassTally t = tally(y, yhat, c);
    sum += static_cast<double>(t.support) * f1_of(t.tp, t.fp, t.fn);
  }
  return sum / static_cast<double>(y.size());
}

inline double macro_f1(std::span<const int> y, std::span<const int> yhat,
                       std::span<const int> vocab) {
  double sum = 0.0;
  std::size_t present = 0;
  for (int c : vocab) {
    const ClassTally t = tally(y, yhat, c);
    if (t.support == 0) continue;
    sum += f1_of(t.tp, t.fp, t.fn);
    ++present;
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

// Pairwise Mann-Whitney count per class, ties worth one half.
inline double macro_auc(std::span<const int> y, const Matrix& proba, std::span<const int> vocab) {
  double sum = 0.0;
  std::size_t eligible = 0;
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    double score = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != vocab[c]) continue;
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (y[j] == vocab[c]) continue;
        ++pairs;
        if (proba(i, c) > proba(j, c)) score += 1.0;
        if (proba(i, c) == proba(j, c)) score += 0.5;
      }
    }
    if (pairs == 0) continue;
    sum += score / static_cast<double>(pairs);
    ++eligible;
  }
  return sum / static_cast<double>(eligible);
}

inline std::vector<std::vector<double>> confusion(std::span<const int> y, std::span<const int> yhat,
                                                  std::span<const int> vocab) {
  const std::size_t k = vocab.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::size_t a = 0, b = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (vocab[c] == y[i]) a = c;
      if (vocab[c] == yhat[i]) b = c;
    }
    m[a][b] += 1.0;
  }
  return m;
}

// Gorodkin's R_K written as the triple sums over the confusion matrix.
inline double mcc(const std::vector<std::vector<double>>& cm) {
  const std::size_t k = cm.size();
  double num = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t m = 0; m < k; ++m) num += cm[a][a] * cm[l][m] - cm[a][l] * cm[m][a];
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double row_a = 0.0, col_a = 0.0, row_rest = 0.0, col_rest = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      row_a += cm[a][l];
      col_a += cm[l][a];
    }
    for (std::size_t b = 0; b < k; ++b) {
      if (b == a) continue;
      for (std::size_t l = 0; l < k; ++l) {
        row_rest += cm[b][l];
        col_rest += cm[l][b];
      }
    }
    d1 += row_a * row_rest;
    d2 += col_a * col_rest;
  }
  if (d1 == 0.0 || d2 == 0.0) return 0.0;
  return num / (std::sqrt(d1) * std::sqrt(d2));
}

inline double brier(std::span<const int> y, const Matrix& proba, std::span<const int> vocab) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const double t = y[i] == vocab[c] ? 1.0 : 0.0;
      sum += (proba(i, c) - t) * (proba(i, c) - t);
    }
  }
  return sum / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Split searches.

struct CartSplit {
  int feature = -1;
  double threshold = 0.0;
  double decrease = -1.0;
};

inline double node_impurity(const std::vector<double>& w, bool entropy) {
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) return 0.0;
  double out = entropy ? 0.0 : 1.0;
  for (double v : w) {
    const double p = v / total;
    if (entropy) {
      if (p > 0.0) out -= p * std::log2(p);
    } else {
      out -= p * p;
    }
  }
  return total * out;
}

// Every (feature, midpoint) pair, impurities recomputed from scratch.
inline CartSplit exhaustive_cart_split(const Matrix& x, std::span<const int> y,
                                       std::span<const double> w, std::size_t classes,
                                       bool entropy, std::size_t min_leaf = 1) {
  std::vector<double> all(classes, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) all[static_cast<std::size_t>(y[i])] += w[i];
  const double parent = node_impurity(all, entropy);
  CartSplit best;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> values;
    for (std::size_t i = 0; i < x.rows(); ++i) values.push_back(x(i, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double thr = 0.5 * (values[v] + values[v + 1]);
      std::vector<double> left(classes, 0.0), right(classes, 0.0);
      std::size_t nl = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (x(i, f) <= thr) {
          left[static_cast<std::size_t>(y[i])] += w[i];
          ++nl;
        } else {
          right[static_cast<std::size_t>(y[i])] += w[i];
        }
      }
      if (nl < min_leaf || x.rows() - nl < min_leaf) continue;
      const double dec = parent - node_impurity(left, entropy) - node_impurity(right, entropy);
      if (dec > best.decrease) best = {static_cast<int>(f), thr, dec};
    }
  }
  return best;
}

// Impurity decrease of one given split, for judging ties between maximisers.
inline double cart_split_decrease(const Matrix& x, std::span<const int> y, std::span<const double> w,
                                  std::size_t classes, bool entropy, int feature, double threshold) {
  std::vector<double> all(classes, 0.0), left(classes, 0.0), right(classes, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    all[c] += w[i];
    (x(i, static_cast<std::size_t>(feature)) <= threshold ? left : right)[c] += w[i];
  }
  return node_impurity(all, entropy) - node_impurity(left, entropy) - node_impurity(right, entropy);
}

// The fitted root split is optimal when it is the oracle's split or scores the
// same decrease.
inline bool cart_root_is_optimal(const Matrix& x, std::span<const int> y, std::span<const double> w,
                                 std::size_t classes, bool entropy, const CartSplit& best,
                                 bool is_leaf, int feature, double threshold) {
  if (best.feature < 0) return is_leaf;
  if (is_leaf) return false;
  if (feature == best.feature && threshold == best.threshold) return true;
  const double got = cart_split_decrease(x, y, w, classes, entropy, feature, threshold);
  return std::abs(got - best.decrease) <= 1e-9 * std::max(1.0, std::abs(best.decrease));
}

struct HistSplit {
  int feature = -1;
  std::size_t bin = 0;
  double gain = 0.0;
};

// Every (feature, bin boundary) pair with left/right sums taken over rows.
inline HistSplit exhaustive_hist_split(const BinnedMatrix& binned, std::span<const double> g,
                                       std::span<const double> h, double lambda, double gamma) {
  double gt = 0.0, ht = 0.0;
  for (std::size_t i = 0; i < binned.rows; ++i) {
    gt += g[i];
    ht += h[i];
  }
  HistSplit best;
  for (std::size_t f = 0; f < binned.cols; ++f) {
    for (std::size_t b = 0; b + 1 < binned.num_bins[f]; ++b) {
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (std::size_t i = 0; i < binned.rows; ++i) {
        if (binned.at(i, f) > b) continue;
        gl += g[i];
        hl += h[i];
        ++nl;
      }
      if (nl == 0 || nl == binned.rows) continue;
      const double gr = gt - gl, hr = ht - hl;
      const double gain =
          0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - gt * gt / (ht + lambda)) -
          gamma;
      if (gain > best.gain) best = {static_cast<int>(f), b, gain};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Resampling geometry.

inline double sq_dist(const Matrix& x, std::size_t a, std::size_t b) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) d += (x(a, j) - x(b, j)) * (x(a, j) - x(b, j));
  return d;
}

// Mutual cross-class nearest neighbours by full pairwise scan.
inline std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Matrix& x,
                                                                    std::span<const int> y) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = sq_dist(x, i, j);
      if (d < best) {
        best = d;
        nn[i] = j;
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = nn[i];
    if (i < j && nn[j] == i && y[i] != y[j]) links.emplace_back(i, j);
  }
  return links;
}

// Distance from p to the segment [a, b].
inline double segment_distance(std::span<const double> p, std::span<const double> a,
                               std::span<const double> b) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    ab2 += (b[j] - a[j]) * (b[j] - a[j]);
    ap_ab += (p[j] - a[j]) * (b[j] - a[j]);
  }
  const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double q = a[j] + t * (b[j] - a[j]);
    d += (p[j] - q) * (p[j] - q);
  }
  return std::sqrt(d);
}

}  // namespace wineqc::oracle
