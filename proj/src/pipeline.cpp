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

#include "wineqc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace wineqc {

namespace {

using nlohmann::json;

MetricSummary summary_of(const MetricsReport& m) {
  return {m.accuracy, m.macro_f1, m.weighted_f1, m.macro_auc, m.mcc, m.brier};
}

// Applies `op` field by field so mean/std code is written once.
template <typename Op>
MetricSummary combine(const MetricSummary& a, const MetricSummary& b, Op op) {
  return {op(a.accuracy, b.accuracy), op(a.macro_f1, b.macro_f1),
          op(a.weighted_f1, b.weighted_f1), op(a.macro_auc, b.macro_auc),
          op(a.mcc, b.mcc), op(a.brier, b.brier)};
}

std::pair<MetricSummary, MetricSummary> mean_std(const std::vector<MetricsReport>& folds) {
  MetricSummary mean;
  if (folds.empty()) return {mean, mean};
  const double n = static_cast<double>(folds.size());
  for (const MetricsReport& f : folds) {
    mean = combine(mean, summary_of(f), [n](double acc, double v) { return acc + v / n; });
  }
  MetricSummary var;
  for (const MetricsReport& f : folds) {
    const MetricSummary s = summary_of(f);
    const MetricSummary d = combine(s, mean, [](double v, double m) { return (v - m) * (v - m); });
    var = combine(var, d, [n](double acc, double v) { return acc + v / n; });
  }
  const MetricSummary std_dev = combine(var, var, [](double v, double) { return std::sqrt(v); });
  return {mean, std_dev};
}

ClassCounts counts_at(std::span<const int> labels, std::span<const std::size_t> indices) {
  std::vector<int> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(labels[i]);
  return class_counts(picked);
}

// Evaluated label multiset recovered from per-class supports.
ClassCounts counts_from_supports(const MetricsReport& m) {
  ClassCounts c;
  for (const ClassScore& s : m.per_class) {
    if (s.support == 0) continue;
    c.counts[s.label] = s.support;
    c.total += s.support;
  }
  return c;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string format_counts(const ClassCounts& c) {
  std::string out;
  for (const auto& [label, n] : c.counts) {
    if (!out.empty()) out += ' ';
    out += std::to_string(label) + ":" + std::to_string(n);
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (selection.top_k < 1) throw ConfigError("selection.top_k must be at least 1");
  if (!(selected_budget_factor > 0.0)) throw ConfigError("selected_budget_factor must be positive");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (phases != "full" && phases != "selected" && phases != "both") {
    throw ConfigError("phases must be full, selected or both (got '" + phases + "')");
  }
}

SelectionResult select_features(std::span<const double> importances,
                                std::span<const std::string> names, std::size_t top_k,
                                double min_importance) {
  if (importances.size() != names.size()) {
    throw ConfigError("select_features: importance and name counts differ");
  }
  if (importances.empty()) throw ConfigError("select_features: no features");
  SelectionResult result;
  std::vector<std::size_t> order(importances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importances[a] > importances[b]; });
  for (std::size_t i : order) result.ranked.push_back({i, names[i], importances[i]});
  for (std::size_t i : order) {
    if (result.chosen.size() == top_k) break;
    if (importances[i] >= min_importance) result.chosen.push_back(i);
  }
  if (result.chosen.empty()) {
    result.chosen.push_back(order.front());
    result.fallback = true;
  }
  return result;
}

const PhaseReport* ExperimentReport::phase(const std::string& name) const {
  for (const PhaseReport& p : phases) {
    if (p.phase == name) return &p;
  }
  return nullptr;
}

const Dataset& HoldoutVault::read(const std::string& phase) {
  reads_.push_back({phase, tuning_complete_, test_.size()});
  tuning_complete_ = false;
  return test_;
}

double stage_seconds(const std::vector<StageTiming>& timings, const std::string& stage) {
  double total = 0.0;
  for (const StageTiming& t : timings) {
    if (t.stage == stage) total += t.seconds;
  }
  return total;
}

namespace {

struct PhaseRun {
  PhaseReport report;
  StudyResult study;
  TrainedPipeline refit;
};

// Tune, refit on the whole training portion and (optionally) read the test set.
PhaseRun run_phase(const std::string& name, const Dataset& train, const std::vector<std::size_t>& columns,
                   const FoldPlan& plan, const ExperimentConfig& config, std::size_t budget,
                   const std::optional<ParamMap>& fixed, HoldoutVault& vault, bool read_test,
                   const std::vector<int>& vocab, std::vector<StageTiming>& timings) {
  const Dataset phase_train = train.with_features(columns);
  PhaseRun run;
  PhaseReport& rep = run.report;
  rep.phase = name;
  rep.features = phase_train.feature_names;

  StudyConfig study_config;
  study_config.family = config.family;
  study_config.budget = budget;
  study_config.seed = derive_seed(config.seed, name == "full" ? 0x10 : 0x20);
  study_config.jobs = config.jobs;
  study_config.pruner.enabled = config.prune;
  study_config.policy = config.policy;
  study_config.fixed_params = fixed;

  bool disjoint = true;
  const FitAudit audit = [&](std::size_t f, std::span<const std::size_t> fit_rows) {
    const auto& val = plan.folds.at(f).validation_indices;
    const std::set<std::size_t> held(val.begin(), val.end());
    for (std::size_t r : fit_rows) {
      if (held.count(r)) disjoint = false;
    }
  };
  try {
    run.study = profile_stage(
        "study_" + name,
        [&] { return run_study(phase_train, plan, default_space(config.family), study_config, audit); },
        timings);
  } catch (const std::exception& e) {
    throw StageError("study_" + name, e.what());
  }

  const TrialRecord& best = run.study.best_trial();
  rep.trials = run.study.trials.size();
  rep.complete = run.study.count(TrialStatus::kComplete);
  rep.pruned = run.study.count(TrialStatus::kPruned);
  rep.failed = run.study.count(TrialStatus::kFailed);
  rep.best_trial = best.id;
  rep.best_params = best.params;
  std::tie(rep.cv_mean, rep.cv_std) = mean_std(best.folds);
  rep.cv_folds = best.folds;
  rep.fold_resample = run.study.fold_resample;
  for (const MetricsReport& m : best.folds) rep.validation_counts.push_back(counts_from_supports(m));
  rep.fit_rows_disjoint = disjoint;

  try {
    run.refit = profile_stage(
        "refit_" + name,
        [&] {
          return train_pipeline(config.family, best.params, phase_train.features, phase_train.labels,
                                derive_seed(config.seed, name == "full" ? 0x11 : 0x21),
                                config.policy);
        },
        timings);
  } catch (const std::exception& e) {
    throw StageError("refit_" + name, e.what());
  }
  rep.final_resample = run.refit.resample;
  rep.importance = run.refit.model.importance();

  if (read_test) {
    vault.mark_tuning_complete();
    try {
      rep.test = profile_stage(
          "test_" + name,
          [&] {
            const Dataset& test = vault.read(name);
            const Matrix x = test.features.select_cols(columns);
            return evaluate(test.labels, run.refit.predict_proba(x, vocab), vocab);
          },
          timings);
    } catch (const std::exception& e) {
      throw StageError("test_" + name, e.what());
    }
    rep.test_counts = counts_from_supports(rep.test);
  }
  return run;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  Dataset dataset;
  try {
    dataset = load_csv(config.data_path, config.csv);
  } catch (const std::exception& e) {
    throw StageError("load", e.what());
  }
  return run_experiment(dataset, config);
}

ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
  try {
    config.validate();
    validate(dataset);
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }

  ExperimentResult result;
  ExperimentReport& report = result.report;
  report.model = family_display_name(config.family);
  report.family = family_token(config.family);
  report.dataset = config.color;
  report.seed = config.seed;
  report.trials = config.trials;
  report.folds = config.folds;
  report.test_fraction = config.test_fraction;
  report.n_total = dataset.size();
  result.labels = dataset.labels;

  try {
    result.holdout = profile_stage(
        "holdout_split",
        [&] { return stratified_holdout(dataset, config.test_fraction, config.seed); },
        result.timings);
  } catch (const std::exception& e) {
    throw StageError("holdout_split", e.what());
  }
  const Dataset train = dataset.subset(result.holdout.train_indices);
  HoldoutVault vault(dataset.subset(result.holdout.test_indices));
  report.n_train = train.size();
  report.n_test = result.holdout.test_indices.size();
  result.train_groups = train.groups;

  try {
    result.plan = profile_stage(
        "fold_plan",
        [&] {
          return stratified_group_kfold(train.labels, train.groups, config.folds,
                                        derive_seed(config.seed, 1));
        },
        result.timings);
  } catch (const std::exception& e) {
    throw StageError("fold_plan", e.what());
  }

  std::vector<std::size_t> all_columns(train.num_features());
  std::iota(all_columns.begin(), all_columns.end(), 0);
  const bool report_full = config.phases != "selected";
  const bool report_selected = config.phases != "full";

  PhaseRun full = run_phase("full", train, all_columns, result.plan, config, config.trials,
                            std::nullopt, vault, report_full, dataset.class_vocab, result.timings);

  std::optional<PhaseRun> selected;
  if (report_selected) {
    SelectionResult selection;
    try {
      selection = profile_stage(
          "selection",
          [&] {
            return select_features(full.report.importance, train.feature_names,
                                   config.selection.top_k, config.selection.min_importance);
          },
          result.timings);
    } catch (const std::exception& e) {
      throw StageError("selection", e.what());
    }
    full.report.selection = selection;
    const auto budget = static_cast<std::size_t>(std::max<long long>(
        1, std::llround(static_cast<double>(config.trials) * config.selected_budget_factor)));
    std::optional<ParamMap> fixed;
    if (!config.retune_selected) fixed = full.report.best_params;
    selected = run_phase("selected", train, selection.chosen, result.plan, config,
                         config.retune_selected ? budget : 1, fixed, vault, true,
                         dataset.class_vocab, result.timings);
    selected->report.selection = selection;
  }

  if (report_full) {
    report.phases.push_back(full.report);
    result.studies.emplace_back("full", std::move(full.study));
  }
  if (selected) {
    report.phases.push_back(selected->report);
    result.studies.emplace_back("selected", std::move(selected->study));
  }
  report.test_reads = vault.reads();
  return result;
}

void to_json(json& j, const MetricSummary& m) {
  j = json{{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"weighted_f1", m.weighted_f1},
           {"macro_auc", m.macro_auc}, {"mcc", m.mcc},         {"brier", m.brier}};
}

void from_json(const json& j, MetricSummary& m) {
  j.at("accuracy").get_to(m.accuracy);
  j.at("macro_f1").get_to(m.macro_f1);
  j.at("weighted_f1").get_to(m.weighted_f1);
  j.at("macro_auc").get_to(m.macro_auc);
  j.at("mcc").get_to(m.mcc);
  j.at("brier").get_to(m.brier);
}

void to_json(json& j, const SelectionResult& s) {
  json ranked = json::array();
  for (const RankedFeature& r : s.ranked) {
    ranked.push_back({{"index", r.index}, {"name", r.name}, {"importance", r.importance}});
  }
  j = json{{"ranked", ranked}, {"chosen", s.chosen}, {"fallback", s.fallback}};
}

void from_json(const json& j, SelectionResult& s) {
  s.ranked.clear();
  for (const json& r : j.at("ranked")) {
    s.ranked.push_back({r.at("index").get<std::size_t>(), r.at("name").get<std::string>(),
                        r.at("importance").get<double>()});
  }
  j.at("chosen").get_to(s.chosen);
  j.at("fallback").get_to(s.fallback);
}

void to_json(json& j, const PhaseReport& p) {
  j = json{{"phase", p.phase},
           {"features", p.features},
           {"trials", p.trials},
           {"complete", p.complete},
           {"pruned", p.pruned},
           {"failed", p.failed},
           {"best_trial", p.best_trial},
           {"best_params", params_to_json(p.best_params)},
           {"cv_mean", p.cv_mean},
           {"cv_std", p.cv_std},
           {"cv_folds", p.cv_folds},
           {"fold_resample", p.fold_resample},
           {"validation_counts", p.validation_counts},
           {"fit_rows_disjoint", p.fit_rows_disjoint},
           {"final_resample", p.final_resample},
           {"test", p.test},
           {"test_counts", p.test_counts},
           {"importance", p.importance}};
  j["selection"] = p.selection ? json(*p.selection) : json(nullptr);
}

void from_json(const json& j, PhaseReport& p) {
  j.at("phase").get_to(p.phase);
  j.at("features").get_to(p.features);
  j.at("trials").get_to(p.trials);
  j.at("complete").get_to(p.complete);
  j.at("pruned").get_to(p.pruned);
  j.at("failed").get_to(p.failed);
  j.at("best_trial").get_to(p.best_trial);
  p.best_params = params_from_json(j.at("best_params"));
  j.at("cv_mean").get_to(p.cv_mean);
  j.at("cv_std").get_to(p.cv_std);
  j.at("cv_folds").get_to(p.cv_folds);
  j.at("fold_resample").get_to(p.fold_resample);
  j.at("validation_counts").get_to(p.validation_counts);
  j.at("fit_rows_disjoint").get_to(p.fit_rows_disjoint);
  j.at("final_resample").get_to(p.final_resample);
  j.at("test").get_to(p.test);
  j.at("test_counts").get_to(p.test_counts);
  j.at("importance").get_to(p.importance);
  if (j.at("selection").is_null()) {
    p.selection.reset();
  } else {
    p.selection = j.at("selection").get<SelectionResult>();
  }
}

void to_json(json& j, const ExperimentReport& r) {
  json reads = json::array();
  for (const TestRead& t : r.test_reads) {
    reads.push_back({{"phase", t.phase}, {"after_tuning", t.after_tuning}, {"rows", t.rows}});
  }
  j = json{{"model", r.model},       {"family", r.family},   {"dataset", r.dataset},
           {"seed", r.seed},         {"trials", r.trials},   {"folds", r.folds},
           {"test_fraction", r.test_fraction},               {"n_total", r.n_total},
           {"n_train", r.n_train},   {"n_test", r.n_test},   {"phases", r.phases},
           {"test_reads", reads}};
}

void from_json(const json& j, ExperimentReport& r) {
  j.at("model").get_to(r.model);
  j.at("family").get_to(r.family);
  j.at("dataset").get_to(r.dataset);
  j.at("seed").get_to(r.seed);
  j.at("trials").get_to(r.trials);
  j.at("folds").get_to(r.folds);
  j.at("test_fraction").get_to(r.test_fraction);
  j.at("n_total").get_to(r.n_total);
  j.at("n_train").get_to(r.n_train);
  j.at("n_test").get_to(r.n_test);
  j.at("phases").get_to(r.phases);
  r.test_reads.clear();
  for (const json& t : j.at("test_reads")) {
    r.test_reads.push_back({t.at("phase").get<std::string>(), t.at("after_tuning").get<bool>(),
                            t.at("rows").get<std::size_t>()});
  }
}

std::string report_csv(const ExperimentReport& report, bool header) {
  std::ostringstream out;
  if (header) out << kReportCsvHeader << '\n';
  for (const PhaseReport& p : report.phases) {
    const MetricsReport& m = p.test;
    out << report.model << ',' << report.dataset << ',' << p.phase << ',' << fixed(m.accuracy, 4)
        << ',' << fixed(m.macro_f1, 4) << ',' << fixed(m.weighted_f1, 4) << ','
        << fixed(m.macro_auc, 4) << ',' << fixed(m.mcc, 4) << ',' << fixed(m.brier, 4) << '\n';
  }
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  return json(report).dump(2) + "\n";
}

std::string report_markdown(const ExperimentReport& report, std::span<const StageTiming> timings) {
  std::ostringstream out;
  out << "# " << report.model << " on " << report.dataset << " wine\n\n";
  out << "Seed " << report.seed << ", " << report.trials << " trials, " << report.folds
      << "-fold CV, " << report.n_train << " train / " << report.n_test << " test rows.\n\n";

  out << "## Held-out test metrics\n\n";
  out << "| Phase | Features | CV weighted F1 | Accuracy | Macro F1 | Weighted F1 | Macro AUC | "
         "MCC | Brier |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const PhaseReport& p : report.phases) {
    const MetricsReport& m = p.test;
    out << "| " << p.phase << " | " << p.features.size() << " | " << fixed(p.cv_mean.weighted_f1, 4)
        << " ± " << fixed(p.cv_std.weighted_f1, 4) << " | " << fixed(m.accuracy, 4) << " | "
        << fixed(m.macro_f1, 4) << " | " << fixed(m.weighted_f1, 4) << " | "
        << fixed(m.macro_auc, 4) << " | " << fixed(m.mcc, 4) << " | " << fixed(m.brier, 4)
        << " |\n";
  }

  out << "\n## Search\n\n| Phase | Trials | Complete | Pruned | Failed | Best trial | Best "
         "parameters |\n|---|---|---|---|---|---|---|\n";
  for (const PhaseReport& p : report.phases) {
    std::string params;
    for (const auto& [k, v] : p.best_params) {
      if (!params.empty()) params += ", ";
      params += k + "=" + param_to_string(v);
    }
    out << "| " << p.phase << " | " << p.trials << " | " << p.complete << " | " << p.pruned
        << " | " << p.failed << " | " << p.best_trial << " | " << params << " |\n";
  }

  for (const PhaseReport& p : report.phases) {
    if (!p.selection || p.phase != "full") continue;
    out << "\n## Feature ranking\n\n| Rank | Feature | Importance | Kept |\n|---|---|---|---|\n";
    const SelectionResult& s = *p.selection;
    for (std::size_t r = 0; r < s.ranked.size(); ++r) {
      const bool kept =
          std::find(s.chosen.begin(), s.chosen.end(), s.ranked[r].index) != s.chosen.end();
      out << "| " << r + 1 << " | " << s.ranked[r].name << " | "
          << fixed(s.ranked[r].importance, 4) << " | " << (kept ? "yes" : "") << " |\n";
    }
    if (s.fallback) out << "\nNo feature reached the cutoff; the top-ranked one was kept.\n";
  }

  for (const PhaseReport& p : report.phases) {
    out << "\n## Class balance (" << p.phase << ")\n\n";
    out << "| Fit | Before | After | IR before | IR after | Synthetic | Tomek removed |\n";
    out << "|---|---|---|---|---|---|---|\n";
    auto row = [&](const std::string& label, const ResampleReport& r) {
      out << "| " << label << " | " << format_counts(r.counts_before) << " | "
          << format_counts(r.counts_after) << " | " << fixed(r.ir_before, 2) << " | "
          << fixed(r.ir_after, 2) << " | " << r.synthetic_count << " | " << r.tomek_removed
          << " |\n";
    };
    for (std::size_t f = 0; f < p.fold_resample.size(); ++f) {
      row("fold " + std::to_string(f), p.fold_resample[f]);
    }
    row("refit", p.final_resample);
  }

  for (const PhaseReport& p : report.phases) {
    out << "\n## Test confusion matrix (" << p.phase << ")\n\n| true \\ pred |";
    for (const ClassScore& c : p.test.per_class) out << ' ' << c.label << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < p.test.per_class.size(); ++i) out << "---|";
    out << '\n';
    for (std::size_t i = 0; i < p.test.confusion.size(); ++i) {
      out << "| " << p.test.per_class[i].label << " |";
      for (std::size_t v : p.test.confusion[i]) out << ' ' << v << " |";
      out << '\n';
    }
  }

  if (!timings.empty()) {
    out << "\n## Timing\n\n| Stage | Seconds |\n|---|---|\n";
    for (const StageTiming& t : timings) out << "| " << t.stage << " | " << fixed(t.seconds, 3) << " |\n";
  }
  return out.str();
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  const ExperimentReport& report = result.report;
  if (report.phases.empty()) throw StageError("report", "no phase produced metrics");

  std::vector<std::pair<std::filesystem::path, std::string>> files;
  files.emplace_back("report.csv", report_csv(report));
  files.emplace_back("report.json", report_json(report));
  files.emplace_back("summary.md", report_markdown(report, result.timings));

  std::ostringstream study;
  study << "phase,trial,step,value,status\n";
  for (const auto& [phase, s] : result.studies) write_study_csv(study, s, phase);
  files.emplace_back("study.csv", study.str());

  json timing = json::array();
  for (const StageTiming& t : result.timings) timing.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  json trial_seconds = json::object();
  for (const auto& [phase, s] : result.studies) {
    std::vector<double> secs;
    for (const TrialRecord& t : s.trials) secs.push_back(t.seconds);
    trial_seconds[phase] = secs;
  }
  files.emplace_back("timings.json",
                     json{{"stages", timing}, {"trial_seconds", trial_seconds}}.dump(2) + "\n");

  json holdout = result.holdout;
  holdout["labels"] = result.labels;
  files.emplace_back("folds/holdout.json", holdout.dump() + "\n");
  json plan = result.plan;
  plan["groups"] = result.train_groups;
  files.emplace_back("folds/plan.json", plan.dump() + "\n");
  for (const PhaseReport& p : report.phases) {
    for (std::size_t f = 0; f < p.cv_folds.size(); ++f) {
      json fold{{"phase", p.phase},
                {"fold", f},
                {"resample", p.fold_resample.at(f)},
                {"validation_counts", p.validation_counts.at(f)},
                {"metrics", p.cv_folds[f]}};
      files.emplace_back("folds/" + p.phase + "_fold" + std::to_string(f) + ".json",
                         fold.dump(2) + "\n");
    }
  }

  try {
    std::filesystem::create_directories(out_dir / "folds");
    for (const auto& [name, content] : files) {
      std::ofstream out(out_dir / name, std::ios::binary);
      out << content;
      if (!out) throw Error("cannot write " + (out_dir / name).string());
    }
  } catch (const std::exception& e) {
    throw StageError("report", e.what());
  }
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

ExperimentReport load_report(const std::filesystem::path& dir) {
  try {
    return read_json(dir / "report.json").get<ExperimentReport>();
  } catch (const json::exception& e) {
    throw DataError((dir / "report.json").string() + ": " + e.what());
  }
}

AuditResult audit_artifacts(const std::filesystem::path& dir) {
  AuditResult result;
  auto check = [&](const std::string& name, bool ok) {
    (ok ? result.passed : result.failed).push_back(name);
  };

  const ExperimentReport report = load_report(dir);
  const json holdout_json = read_json(dir / "folds" / "holdout.json");
  const json plan_json = read_json(dir / "folds" / "plan.json");
  const HoldoutSplit holdout = holdout_json.get<HoldoutSplit>();
  const std::vector<int> labels = holdout_json.at("labels").get<std::vector<int>>();
  const FoldPlan plan = plan_json.get<FoldPlan>();
  const std::vector<std::int64_t> groups = plan_json.at("groups").get<std::vector<std::int64_t>>();

  // Holdout partition.
  {
    std::vector<int> seen(labels.size(), 0);
    bool in_range = true;
    for (std::size_t i : holdout.train_indices) in_range = in_range && i < labels.size() && ++seen[i];
    for (std::size_t i : holdout.test_indices) in_range = in_range && i < labels.size() && ++seen[i];
    const bool partition =
        in_range && std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    check("holdout partitions every row exactly once", partition);
    check("holdout sizes match the report", holdout.train_indices.size() == report.n_train &&
                                                holdout.test_indices.size() == report.n_test &&
                                                labels.size() == report.n_total);
    if (partition) {
      const ClassCounts all = class_counts(labels);
      const ClassCounts test = counts_at(labels, holdout.test_indices);
      const double share = static_cast<double>(holdout.test_indices.size()) /
                           static_cast<double>(labels.size());
      bool stratified = true;
      for (const auto& [label, n] : all.counts) {
        const double expected = static_cast<double>(n) * share;
        stratified = stratified && std::abs(static_cast<double>(test.count(label)) - expected) <= 1.0;
      }
      check("holdout keeps every class within one row of its share", stratified);
    }
  }

  std::vector<int> train_labels;
  for (std::size_t i : holdout.train_indices) train_labels.push_back(i < labels.size() ? labels[i] : 0);

  // Fold plan.
  {
    const std::size_t n = train_labels.size();
    std::vector<int> validated(n, 0);
    bool folds_ok = plan.folds.size() == report.folds && groups.size() == n;
    bool atomic = groups.size() == n;
    for (const Fold& f : plan.folds) {
      std::vector<int> mark(n, 0);
      for (std::size_t i : f.train_indices) folds_ok = folds_ok && i < n && ++mark[i];
      for (std::size_t i : f.validation_indices) {
        folds_ok = folds_ok && i < n && ++mark[i];
        if (i < n) ++validated[i];
      }
      folds_ok = folds_ok && std::all_of(mark.begin(), mark.end(), [](int m) { return m == 1; });
      if (atomic) {
        std::set<std::int64_t> train_groups;
        for (std::size_t i : f.train_indices) if (i < n) train_groups.insert(groups[i]);
        for (std::size_t i : f.validation_indices) {
          if (i < n && train_groups.count(groups[i])) atomic = false;
        }
      }
    }
    folds_ok = folds_ok && std::all_of(validated.begin(), validated.end(), [](int v) { return v == 1; });
    check("folds partition the training rows and validate each row once", folds_ok);
    check("no group straddles a fold boundary", atomic);
  }

  // Phases.
  std::map<std::string, std::size_t> reads_per_phase;
  bool reads_ok = true;
  for (const TestRead& r : report.test_reads) {
    ++reads_per_phase[r.phase];
    reads_ok = reads_ok && r.after_tuning && r.rows == holdout.test_indices.size();
  }
  for (const PhaseReport& p : report.phases) {
    reads_ok = reads_ok && reads_per_phase[p.phase] == 1;
  }
  check("test set read once per phase, after tuning", reads_ok);

  const ClassCounts expected_test = counts_at(labels, holdout.test_indices);
  for (const PhaseReport& p : report.phases) {
    const std::string tag = " (" + p.phase + ")";
    check("test labels scored unchanged" + tag, p.test_counts == expected_test);

    bool val_ok = p.validation_counts.size() == plan.folds.size();
    bool resample_ok = p.fold_resample.size() == plan.folds.size();
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const ClassCounts val = counts_at(train_labels, plan.folds[f].validation_indices);
      if (f < p.validation_counts.size()) val_ok = val_ok && p.validation_counts[f] == val;
      if (f < p.fold_resample.size()) {
        const ClassCounts fit = counts_at(train_labels, plan.folds[f].train_indices);
        resample_ok = resample_ok && p.fold_resample[f].counts_before == fit;
      }
      const auto fold_file = dir / "folds" / (p.phase + "_fold" + std::to_string(f) + ".json");
      if (std::filesystem::exists(fold_file)) {
        const json fj = read_json(fold_file);
        val_ok = val_ok && fj.at("validation_counts").get<ClassCounts>() == val;
      } else {
        val_ok = false;
      }
    }
    check("validation labels scored unchanged" + tag, val_ok);
    check("fold resampling saw exactly the fold training rows" + tag, resample_ok);
    check("preprocessing never fitted on validation rows" + tag, p.fit_rows_disjoint);
    check("refit resampling saw exactly the training rows" + tag,
          p.final_resample.counts_before == class_counts(train_labels));
  }
  return result;
}

}  // namespace wineqc
