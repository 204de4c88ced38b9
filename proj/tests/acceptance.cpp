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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when any
// line fails. Tolerances are fixed here and not configurable.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "wineqc/boost.hpp"
#include "wineqc/forest.hpp"
#include "wineqc/kernels.hpp"
#include "wineqc/metrics.hpp"
#include "wineqc/pipeline.hpp"
#include "wineqc/resample.hpp"

using namespace wineqc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void line(bool ok, const std::string& id, const std::string& what) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << "  " << what << std::endl;
  if (!ok) ++failures;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct FamilyRun {
  ExperimentResult result;
  fs::path dir;
};

// ---- property suites (criteria 9-12, 14) ----

bool metric_oracle(std::string& detail) {
  const std::vector<int> y{0, 0, 0, 1}, yhat{0, 0, 1, 1}, vocab{0, 1};
  const double example = weighted_f1(y, yhat, vocab);
  if (std::abs(example - 0.7666666666666667) > 1e-9) {
    detail = "4-sample weighted F1 " + num(example, 6);
    return false;
  }
  Rng rng(2024);
  int checked = 0;
  double worst = 0.0;
  while (checked < 200) {
    const std::size_t c = 2 + uniform_index(rng, 6);
    const std::size_t n = 5 + uniform_index(rng, 60);
    std::vector<int> v, t, p;
    for (std::size_t k = 0; k < c; ++k) v.push_back(3 + static_cast<int>(k));
    Matrix proba(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(v[uniform_index(rng, c)]);
      p.push_back(v[uniform_index(rng, c)]);
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += proba(i, k) = static_cast<double>(uniform_index(rng, 8)) + 0.5;
      for (std::size_t k = 0; k < c; ++k) proba(i, k) /= s;
    }
    if (std::all_of(t.begin(), t.end(), [&](int a) { return a == t[0]; })) continue;
    ++checked;
    const double diffs[] = {
        accuracy(t, p) - oracle::accuracy(t, p),
        weighted_f1(t, p, v) - oracle::weighted_f1(t, p, v),
        macro_f1(t, p, v) - oracle::macro_f1(t, p, v),
        macro_auc_ovr(t, proba, v) - oracle::macro_auc(t, proba, v),
        mcc_multiclass(confusion_matrix(t, p, v)) - oracle::mcc(oracle::confusion(t, p, v)),
        brier_multiclass(t, proba, v) - oracle::brier(t, proba, v)};
    for (double d : diffs) worst = std::max(worst, std::abs(d));
  }
  detail = "200 instances, max |diff| " + std::to_string(worst) + " (tol 1e-9); 4-sample wF1 " +
           num(example, 4);
  return worst <= 1e-9;
}

bool split_oracles(std::string& detail) {
  Rng rng(77);
  int hist_ok = 0, cart_ok = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + uniform_index(rng, 196);
    const std::size_t d = 1 + uniform_index(rng, 5);
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = std::round(uniform01(rng) * 40.0) / 4.0;
    }
    const BinnedMatrix binned = bin_matrix(fit_bins(x, 256), x);
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = 2.0 * uniform01(rng) - 1.0;
      h[i] = 0.05 + uniform01(rng);
    }
    const double lambda = 3.0 * uniform01(rng);
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0U);
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    std::vector<HistBin> hist(binned.total_bins());
    kernels::build_histogram(binned, rows, g, h, features, hist, ExecPolicy::kSerial);
    SplitConstraints k;
    k.lambda = lambda;
    const SplitCandidate got = best_histogram_split(binned, hist, features, k);
    const oracle::HistSplit want = oracle::exhaustive_hist_split(binned, g, h, lambda, 0.0);
    if (got.feature == want.feature &&
        (want.feature < 0 ||
         (got.bin == want.bin && std::abs(got.gain - want.gain) <= 1e-9 * std::max(1.0, want.gain)))) {
      ++hist_ok;
    }

    const std::size_t c = 2 + uniform_index(rng, 3);
    std::vector<int> y(n);
    std::vector<double> w(n);
    Matrix xc(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) xc(i, j) = uniform01(rng);
      const double s = xc(i, 0) + 0.5 * uniform01(rng);
      y[i] = static_cast<int>(std::min<double>(static_cast<double>(c) - 1, std::floor(s * c / 1.5)));
      w[i] = 0.5 + uniform01(rng);
    }
    TreeConfig stump;
    stump.max_depth = 1;
    stump.max_features = {MaxFeatures::Kind::kAll, 1.0};
    const DecisionTree tree = fit_cart(xc, y, w, c, stump);
    const oracle::CartSplit best = oracle::exhaustive_cart_split(xc, y, w, c, false);
    cart_ok += oracle::cart_root_is_optimal(xc, y, w, c, false, best, tree.nodes[0].is_leaf(),
                                            tree.nodes[0].feature, tree.nodes[0].threshold);
  }
  detail = "histogram " + std::to_string(hist_ok) + "/50, CART " + std::to_string(cart_ok) + "/50";
  return hist_ok == 50 && cart_ok == 50;
}

double deviance_at(const std::vector<double>& raw, int y) {
  Matrix m(1, raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) m(0, k) = raw[k];
  return softmax_deviance(std::vector<int>{y}, m, std::vector<double>{1.0});
}

bool gradient_check(std::string& detail) {
  Rng rng(31);
  const double step = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t c = 2 + uniform_index(rng, 6);
    const int y = static_cast<int>(uniform_index(rng, c));
    std::vector<double> raw(c);
    for (double& v : raw) v = 6.0 * uniform01(rng) - 3.0;
    Matrix m(1, c);
    for (std::size_t k = 0; k < c; ++k) m(0, k) = raw[k];
    const GradHess gh = softmax_grad_hess(std::vector<int>{y}, m, std::vector<double>{1.0});
    for (std::size_t k = 0; k < c; ++k) {
      std::vector<double> up = raw, down = raw;
      up[k] += step;
      down[k] -= step;
      const double fd = -(deviance_at(up, y) - deviance_at(down, y)) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - gh.g(0, k)) / std::max(std::abs(gh.g(0, k)), 1e-8));
    }
  }
  detail = "100 cases, max rel. error " + std::to_string(worst) + " (tol 1e-4)";
  return worst <= 1e-4;
}

bool resample_geometry(std::string& detail) {
  Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Matrix x(0, 3);
    std::vector<int> y;
    for (int c = 0; c < 3; ++c) {
      const std::size_t size = c == 0 ? 30 : 3 + uniform_index(rng, 8);
      for (std::size_t i = 0; i < size; ++i) {
        std::vector<double> row{c + uniform01(rng), uniform01(rng), uniform01(rng)};
        x.append_row(row);
        y.push_back(c);
      }
    }
    const LabeledMatrix out =
        smote_oversample(x, y, {{0, 30}, {1, 30}, {2, 30}}, {5, static_cast<std::uint64_t>(t)});
    for (std::size_t r = x.rows(); r < out.x.rows(); ++r) {
      double best = INFINITY;
      for (std::size_t a = 0; a < x.rows(); ++a) {
        for (std::size_t b = 0; b < x.rows(); ++b) {
          if (y[a] != out.y[r] || y[b] != out.y[r]) continue;
          best = std::min(best, oracle::segment_distance(out.x.row(r), x.row(a), x.row(b)));
        }
      }
      worst = std::max(worst, best);
    }
  }
  int tomek_ok = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 99);
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = std::round(uniform01(rng) * 20.0) / 10.0;
      x(i, 1) = std::round(uniform01(rng) * 20.0) / 10.0;
      y[i] = static_cast<int>(uniform_index(rng, 3));
    }
    if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) y[0] += 1;
    tomek_ok += tomek_links(x, y) == oracle::tomek_links(x, y);
  }
  detail = "max synthetic-to-segment distance " + std::to_string(worst) + " (tol 1e-9); Tomek " +
           std::to_string(tomek_ok) + "/50 equal to brute force";
  return worst <= 1e-9 && tomek_ok == 50;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wineqc acceptance checks"};
  std::string data_dir = WINEQC_DATA_DIR;
  std::string out = "acceptance_runs";
  std::size_t trials = 20;
  std::uint64_t seed = 42;
  app.add_option("--data-dir", data_dir, "directory holding winequality-{red,white}.csv");
  app.add_option("--out", out, "where run artifacts are written");
  app.add_option("--trials", trials, "search budget per family and phase (same for all)");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  const fs::path red_path = fs::path(data_dir) / "winequality-red.csv";
  const char* white_env = std::getenv("WINEQC_WHITE_CSV");
  const fs::path white_path =
      white_env ? fs::path(white_env) : fs::path(data_dir) / "winequality-white.csv";
  const bool have_white = fs::exists(white_path);
  const std::string no_white = "white wine data not found at " + white_path.string();

  std::cout << "budget " << trials << " trials per family and phase, seed " << seed << ", "
            << kernels::max_threads() << " thread(s)" << std::endl;

  // One run per colour and family, equal budget.
  using Runs = std::map<ModelFamily, FamilyRun>;
  auto run_colour = [&](const std::string& colour, const fs::path& path) {
    Runs runs;
    for (ModelFamily family : kAllFamilies) {
      ExperimentConfig c;
      c.data_path = path;
      c.color = colour;
      c.family = family;
      c.trials = trials;
      c.seed = seed;
      FamilyRun run;
      run.dir = fs::path(out) / (colour + "_" + family_token(family));
      run.result = run_experiment(c);
      emit_report(run.result, run.dir);
      std::cout << "  ran " << colour << " " << family_token(family) << ": study "
                << num(stage_seconds(run.result.timings, "study_full"), 1) << " s, test wF1 "
                << num(run.result.report.phase("full")->test.weighted_f1) << std::endl;
      runs.emplace(family, std::move(run));
    }
    return runs;
  };
  const Runs red = run_colour("red", red_path);
  const Runs white = have_white ? run_colour("white", white_path) : Runs{};
  auto full_of = [](const Runs& r, ModelFamily f) -> const PhaseReport& {
    return *r.at(f).result.report.phase("full");
  };
  auto sel_of = [](const Runs& r, ModelFamily f) -> const PhaseReport& {
    return *r.at(f).result.report.phase("selected");
  };
  auto top5 = [](const PhaseReport& p) {
    std::vector<std::string> top;
    for (std::size_t i = 0; i < 5 && i < p.selection->ranked.size(); ++i) {
      top.push_back(p.selection->ranked[i].name);
    }
    return top;
  };
  auto contains_all = [](const std::vector<std::string>& top, std::vector<std::string> need) {
    std::string list;
    bool ok = true;
    for (const std::string& s : top) list += (list.empty() ? "" : ", ") + s;
    for (const std::string& n : need) ok = ok && std::find(top.begin(), top.end(), n) != top.end();
    return std::make_pair(ok, "{" + list + "}");
  };
  auto fold_balance = [](const Runs& runs, const std::string& id, const std::string& colour) {
    double worst_ir = 0.0, worst_share = 1.0;
    std::size_t folds = 0;
    for (const auto& [f, run] : runs) {
      for (const PhaseReport& p : run.result.report.phases) {
        for (const ResampleReport& r : p.fold_resample) {
          ++folds;
          worst_ir = std::max(worst_ir, r.ir_after);
          const double c = static_cast<double>(r.counts_after.num_classes());
          for (const auto& [label, n] : r.counts_after.counts) {
            worst_share = std::min(worst_share, c * static_cast<double>(n) /
                                                    static_cast<double>(r.counts_after.total));
          }
        }
      }
    }
    line(worst_ir <= 1.10 && worst_share >= 0.8, id,
         colour + " training folds (" + std::to_string(folds) + "): max IR after " + num(worst_ir) +
             " <= 1.10, min class share x C " + num(worst_share) + " >= 0.8");
  };

  {
    const MetricsReport& t = full_of(red, ModelFamily::kForest).test;
    line(t.weighted_f1 >= 0.60 && t.macro_auc >= 0.78, "C1",
         "red forest: weighted F1 " + num(t.weighted_f1) + " >= 0.60, macro AUC " + num(t.macro_auc) +
             " >= 0.78");
  }
  {
    const double w = full_of(red, ModelFamily::kGbFirstOrder).test.weighted_f1;
    line(w >= 0.61, "C2a", "red gb1: weighted F1 " + num(w) + " >= 0.61");
    if (have_white) {
      const double w1 = full_of(white, ModelFamily::kGbFirstOrder).test.weighted_f1;
      line(w1 >= 0.60, "C2b", "white gb1: weighted F1 " + num(w1) + " >= 0.60");
      const double w2 = full_of(white, ModelFamily::kGbSecondOrder).test.weighted_f1;
      line(w2 >= 0.59, "C3", "white gb2: weighted F1 " + num(w2) + " >= 0.59");
    } else {
      line(false, "C2b", "white gb1: weighted F1 >= 0.60 (" + no_white + ")");
      line(false, "C3", "white gb2: weighted F1 >= 0.59 (" + no_white + ")");
    }
  }
  for (const auto& [colour, runs] : {std::pair<std::string, const Runs*>{"red", &red}, {"white", &white}}) {
    if (runs->empty()) {
      line(false, "C4", colour + ", all families: selected-vs-full drop <= 0.09 (" + no_white + ")");
      continue;
    }
    for (ModelFamily f : kAllFamilies) {
      const double drop = full_of(*runs, f).test.weighted_f1 - sel_of(*runs, f).test.weighted_f1;
      line(drop <= 0.09, "C4", colour + " " + family_token(f) +
                                   ": selected-vs-full weighted F1 drop " + num(drop) + " <= 0.09");
    }
  }
  fold_balance(red, "C5a", "red");
  if (have_white) {
    fold_balance(white, "C5b", "white");
  } else {
    line(false, "C5b", "white training folds: IR <= 1.10 and share >= 0.8/C (" + no_white + ")");
  }
  {
    const auto [ok, list] = contains_all(top5(full_of(red, ModelFamily::kForest)),
                                         {"alcohol", "volatile acidity", "sulphates"});
    line(ok, "C6a", "red forest top-5 " + list + " contains alcohol, volatile acidity, sulphates");
    if (have_white) {
      for (ModelFamily f : {ModelFamily::kGbFirstOrder, ModelFamily::kGbSecondOrder, ModelFamily::kGoss,
                            ModelFamily::kOblivious}) {
        const auto [wok, wlist] =
            contains_all(top5(full_of(white, f)), {"alcohol", "free sulfur dioxide"});
        line(wok, "C6b", "white " + family_token(f) + " top-5 " + wlist +
                             " contains alcohol, free sulfur dioxide");
      }
    } else {
      line(false, "C6b", "white boosted top-5 contains alcohol, free sulfur dioxide (" + no_white + ")");
    }
  }
  {
    const double tf = stage_seconds(red.at(ModelFamily::kForest).result.timings, "study_full");
    const double t2 = stage_seconds(red.at(ModelFamily::kGbSecondOrder).result.timings, "study_full");
    const double t1 = stage_seconds(red.at(ModelFamily::kGbFirstOrder).result.timings, "study_full");
    line(tf < t2 && t2 < t1, "C7",
         "red study time forest " + num(tf, 1) + " s < gb2 " + num(t2, 1) + " s < gb1 " + num(t1, 1) +
             " s at " + std::to_string(trials) + " trials");
  }
  {
    std::size_t checks = 0;
    std::string first;
    for (const Runs* runs : {&red, &white}) {
      for (const auto& [f, run] : *runs) {
        const AuditResult a = audit_artifacts(run.dir);
        checks += a.passed.size() + a.failed.size();
        if (!a.failed.empty() && first.empty()) first = run.dir.string() + ": " + a.failed.front();
      }
    }
    line(first.empty(), "C8",
         "leakage audit over " + std::to_string(checks) + " checks" + (first.empty() ? "" : "; " + first));
  }
  {
    std::string d;
    const bool ok = metric_oracle(d);
    line(ok, "C9", "metric oracle: " + d);
  }
  {
    std::string d;
    const bool ok = split_oracles(d);
    line(ok, "C10", "split oracles (n <= 200, d <= 5, B = 256): " + d);
  }
  {
    std::string d;
    const bool ok = gradient_check(d);
    line(ok, "C11", "softmax finite-difference gradient: " + d);
  }
  {
    std::string d;
    const bool ok = resample_geometry(d);
    line(ok, "C12", "SMOTE/Tomek geometry: " + d);
  }
  {
    ExperimentConfig c;
    c.data_path = red_path;
    c.family = ModelFamily::kGbSecondOrder;
    c.trials = 3;
    c.seed = seed;
    c.policy = ExecPolicy::kSerial;
    const fs::path a = fs::path(out) / "determinism_a";
    const fs::path b = fs::path(out) / "determinism_b";
    emit_report(run_experiment(c), a);
    emit_report(run_experiment(c), b);
    const std::string ja = read_file(a / "report.json");
    line(!ja.empty() && ja == read_file(b / "report.json"), "C13",
         "two serial runs give byte-identical report.json (" + std::to_string(ja.size()) + " bytes)");
  }
  {
    const double bound = rf_error_bound(0.5, 0.0, 10);
    const double ts = ordered_target_statistic({}, 3, 1.0, 0.37);
    line(bound == 0.05 && ts == 0.37, "C14",
         "rf_error_bound(0.5, 0, 10) = " + num(bound, 17) + " (exact 0.05); empty-history TS = " +
             num(ts, 17) + " (exact prior 0.37)");
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " line(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
