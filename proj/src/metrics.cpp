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

#include "wineqc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wineqc {

namespace {

std::size_t class_index(std::span<const int> vocab, int label) {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), label);
  if (it == vocab.end() || *it != label) {
    throw ConfigError("metrics: label " + std::to_string(label) + " is outside the vocabulary");
  }
  return static_cast<std::size_t>(it - vocab.begin());
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ConfigError("metrics: inputs differ in length");
  if (a == 0) throw ConfigError("metrics: empty input");
}

void check_proba(std::span<const int> y_true, const Matrix& proba,
                 std::span<const int> class_vocab) {
  check_lengths(y_true.size(), proba.rows());
  if (proba.cols() != class_vocab.size()) {
    throw ConfigError("metrics: probability columns do not match the vocabulary");
  }
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::span<const int> class_vocab) {
  check_lengths(y_true.size(), y_pred.size());
  const std::size_t c = class_vocab.size();
  ConfusionMatrix cm(c, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++cm[class_index(class_vocab, y_true[i])][class_index(class_vocab, y_pred[i])];
  }
  return cm;
}

std::vector<ClassScore> per_class_scores(const ConfusionMatrix& cm,
                                         std::span<const int> class_vocab) {
  const std::size_t c = cm.size();
  std::vector<ClassScore> out(c);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t predicted = 0;
    std::size_t support = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += cm[j][k];
      support += cm[k][j];
    }
    const auto tp = static_cast<double>(cm[k][k]);
    ClassScore& s = out[k];
    s.label = class_vocab[k];
    s.support = support;
    s.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    s.recall = support == 0 ? 0.0 : tp / static_cast<double>(support);
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  }
  return out;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred,
                   std::span<const int> class_vocab) {
  const auto scores = per_class_scores(confusion_matrix(y_true, y_pred, class_vocab), class_vocab);
  double sum = 0.0;
  for (const ClassScore& s : scores) sum += static_cast<double>(s.support) * s.f1;
  return sum / static_cast<double>(y_true.size());
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred,
                std::span<const int> class_vocab) {
  const auto scores = per_class_scores(confusion_matrix(y_true, y_pred, class_vocab), class_vocab);
  double sum = 0.0;
  std::size_t present = 0;
  for (const ClassScore& s : scores) {
    if (s.support == 0) continue;
    sum += s.f1;
    ++present;
  }
  return sum / static_cast<double>(present);
}

double macro_auc_ovr(std::span<const int> y_true, const Matrix& proba,
                     std::span<const int> class_vocab) {
  check_proba(y_true, proba, class_vocab);
  const std::size_t n = y_true.size();
  std::vector<std::size_t> order(n);
  std::vector<double> ranks(n);
  double total = 0.0;
  std::size_t eligible = 0;
  for (std::size_t c = 0; c < class_vocab.size(); ++c) {
    std::size_t positives = 0;
    for (int y : y_true) positives += y == class_vocab[c] ? 1 : 0;
    if (positives == 0 || positives == n) continue;

    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return proba(a, c) < proba(b, c); });
    // Average 1-based ranks over tied scores.
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && proba(order[j + 1], c) == proba(order[i], c)) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y_true[i] == class_vocab[c]) rank_sum += ranks[i];
    }
    const auto p = static_cast<double>(positives);
    const auto q = static_cast<double>(n - positives);
    total += (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
    ++eligible;
  }
  if (eligible == 0) throw ConfigError("macro_auc_ovr: no class has both positives and negatives");
  return total / static_cast<double>(eligible);
}

double mcc_multiclass(const ConfusionMatrix& cm) {
  const std::size_t c = cm.size();
  if (c == 0) throw ConfigError("mcc_multiclass: empty confusion matrix");
  std::vector<double> t(c, 0.0);
  std::vector<double> p(c, 0.0);
  double correct = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const auto v = static_cast<double>(cm[i][j]);
      t[i] += v;
      p[j] += v;
      s += v;
    }
    correct += static_cast<double>(cm[i][i]);
  }
  double tp = 0.0;
  double pp = 0.0;
  double tt = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    tp += t[k] * p[k];
    pp += p[k] * p[k];
    tt += t[k] * t[k];
  }
  const double cov_yp = correct * s - tp;
  const double cov_pp = s * s - pp;
  const double cov_yy = s * s - tt;
  if (cov_pp == 0.0 || cov_yy == 0.0) return 0.0;
  return cov_yp / std::sqrt(cov_pp * cov_yy);
}

double brier_multiclass(std::span<const int> y_true, const Matrix& proba,
                        std::span<const int> class_vocab) {
  check_proba(y_true, proba, class_vocab);
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const std::size_t truth = class_index(class_vocab, y_true[i]);
    for (std::size_t c = 0; c < class_vocab.size(); ++c) {
      const double diff = proba(i, c) - (c == truth ? 1.0 : 0.0);
      sum += diff * diff;
    }
  }
  return sum / static_cast<double>(y_true.size());
}

std::vector<int> argmax_labels(const Matrix& proba, std::span<const int> class_vocab) {
  if (proba.cols() != class_vocab.size()) {
    throw ConfigError("argmax_labels: probability columns do not match the vocabulary");
  }
  std::vector<int> out(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < proba.cols(); ++c) {
      if (proba(i, c) > proba(i, best)) best = c;
    }
    out[i] = class_vocab[best];
  }
  return out;
}

MetricsReport evaluate(std::span<const int> y_true, const Matrix& proba,
                       std::span<const int> class_vocab) {
  check_proba(y_true, proba, class_vocab);
  const std::vector<int> y_pred = argmax_labels(proba, class_vocab);
  MetricsReport r;
  r.confusion = confusion_matrix(y_true, y_pred, class_vocab);
  r.per_class = per_class_scores(r.confusion, class_vocab);
  r.accuracy = accuracy(y_true, y_pred);
  double weighted = 0.0;
  double macro = 0.0;
  std::size_t present = 0;
  for (const ClassScore& s : r.per_class) {
    weighted += static_cast<double>(s.support) * s.f1;
    if (s.support > 0) {
      macro += s.f1;
      ++present;
    }
  }
  r.weighted_f1 = weighted / static_cast<double>(y_true.size());
  r.macro_f1 = macro / static_cast<double>(present);
  r.macro_auc = macro_auc_ovr(y_true, proba, class_vocab);
  r.mcc = mcc_multiclass(r.confusion);
  r.brier = brier_multiclass(y_true, proba, class_vocab);
  return r;
}

void to_json(nlohmann::json& j, const ClassScore& s) {
  j = nlohmann::json{{"label", s.label},   {"precision", s.precision}, {"recall", s.recall},
                     {"f1", s.f1},         {"support", s.support}};
}

void from_json(const nlohmann::json& j, ClassScore& s) {
  j.at("label").get_to(s.label);
  j.at("precision").get_to(s.precision);
  j.at("recall").get_to(s.recall);
  j.at("f1").get_to(s.f1);
  j.at("support").get_to(s.support);
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"accuracy", r.accuracy},   {"macro_f1", r.macro_f1},
                     {"weighted_f1", r.weighted_f1}, {"macro_auc", r.macro_auc},
                     {"mcc", r.mcc},             {"brier", r.brier},
                     {"per_class", r.per_class}, {"confusion", r.confusion}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  j.at("accuracy").get_to(r.accuracy);
  j.at("macro_f1").get_to(r.macro_f1);
  j.at("weighted_f1").get_to(r.weighted_f1);
  j.at("macro_auc").get_to(r.macro_auc);
  j.at("mcc").get_to(r.mcc);
  j.at("brier").get_to(r.brier);
  j.at("per_class").get_to(r.per_class);
  j.at("confusion").get_to(r.confusion);
}

}  // namespace wineqc
