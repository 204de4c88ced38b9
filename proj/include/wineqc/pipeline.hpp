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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wineqc/data.hpp"
#include "wineqc/metrics.hpp"
#include "wineqc/model.hpp"
#include "wineqc/resample.hpp"
#include "wineqc/split.hpp"
#include "wineqc/tune.hpp"

namespace wineqc {

/// Failure inside one pipeline stage; what() is "<stage>: <message>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct SelectionConfig {
  std::size_t top_k = 5;
  double min_importance = 0.05;
};

struct ExperimentConfig {
  std::filesystem::path data_path;
  std::string color = "red";
  ModelFamily family = ModelFamily::kForest;
  std::size_t trials = 10;
  std::size_t folds = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  SelectionConfig selection;
  double selected_budget_factor = 1.0;
  bool retune_selected = true;  // false: reuse the full-phase parameters
  int jobs = 1;
  bool prune = true;
  std::string phases = "both";  // full | selected | both
  ExecPolicy policy = ExecPolicy::kParallel;
  CsvOptions csv;

  void validate() const;
};

struct RankedFeature {
  std::size_t index = 0;
  std::string name;
  double importance = 0.0;
  bool operator==(const RankedFeature&) const = default;
};

struct SelectionResult {
  std::vector<RankedFeature> ranked;  // descending, ties by feature order
  std::vector<std::size_t> chosen;    // rank order
  bool fallback = false;              // nothing passed the cutoff; top feature kept
  bool operator==(const SelectionResult&) const = default;
};

/// Top `top_k` features whose importance is at least `min_importance`; at
/// least one feature is always kept.
SelectionResult select_features(std::span<const double> importances,
                                std::span<const std::string> names, std::size_t top_k,
                                double min_importance);

struct MetricSummary {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double macro_auc = 0.0;
  double mcc = 0.0;
  double brier = 0.0;
  bool operator==(const MetricSummary&) const = default;
};

struct PhaseReport {
  std::string phase;  // full | selected
  std::vector<std::string> features;
  std::size_t trials = 0;
  std::size_t complete = 0;
  std::size_t pruned = 0;
  std::size_t failed = 0;
  std::size_t best_trial = 0;
  ParamMap best_params;
  MetricSummary cv_mean;
  MetricSummary cv_std;  // population std over the folds
  std::vector<MetricsReport> cv_folds;
  std::vector<ResampleReport> fold_resample;
  std::vector<ClassCounts> validation_counts;
  bool fit_rows_disjoint = true;  // no fold fitted its scaler on validation rows
  ResampleReport final_resample;
  MetricsReport test;
  ClassCounts test_counts;
  std::vector<double> importance;  // over `features`
  std::optional<SelectionResult> selection;
  bool operator==(const PhaseReport&) const = default;
};

struct TestRead {
  std::string phase;
  bool after_tuning = false;
  std::size_t rows = 0;
  bool operator==(const TestRead&) const = default;
};

struct ExperimentReport {
  std::string model;   // display name
  std::string family;  // CLI token
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t folds = 0;
  double test_fraction = 0.0;
  std::size_t n_total = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<PhaseReport> phases;
  std::vector<TestRead> test_reads;

  const PhaseReport* phase(const std::string& name) const;
  bool operator==(const ExperimentReport&) const = default;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Times `action` with a monotonic clock and appends the duration.
template <typename Action>
auto profile_stage(const std::string& label, Action&& action, std::vector<StageTiming>& timings) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    timings.push_back(
        {label, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
  };
  if constexpr (std::is_void_v<decltype(action())>) {
    action();
    record();
  } else {
    auto result = action();
    record();
    return result;
  }
}

/// Grants access to the test partition and records every read.
class HoldoutVault {
 public:
  explicit HoldoutVault(Dataset test) : test_(std::move(test)) {}
  void mark_tuning_complete() { tuning_complete_ = true; }
  const Dataset& read(const std::string& phase);
  const std::vector<TestRead>& reads() const { return reads_; }

 private:
  Dataset test_;
  bool tuning_complete_ = false;
  std::vector<TestRead> reads_;
};

struct ExperimentResult {
  ExperimentReport report;
  std::vector<StageTiming> timings;
  std::vector<std::pair<std::string, StudyResult>> studies;  // by phase
  HoldoutSplit holdout;
  FoldPlan plan;
  std::vector<int> labels;               // full dataset, for artifact audits
  std::vector<std::int64_t> train_groups;
};

ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config);

/// Seconds spent in `stage`, or 0 when absent.
double stage_seconds(const std::vector<StageTiming>& timings, const std::string& stage);

void to_json(nlohmann::json& j, const MetricSummary& m);
void from_json(const nlohmann::json& j, MetricSummary& m);
void to_json(nlohmann::json& j, const SelectionResult& s);
void from_json(const nlohmann::json& j, SelectionResult& s);
void to_json(nlohmann::json& j, const PhaseReport& p);
void from_json(const nlohmann::json& j, PhaseReport& p);
void to_json(nlohmann::json& j, const ExperimentReport& r);
void from_json(const nlohmann::json& j, ExperimentReport& r);

inline constexpr const char* kReportCsvHeader =
    "Model,Dataset,Phase,Accuracy,Macro-F1,Weighted-F1,Macro-AUC,MCC,Brier";

std::string report_csv(const ExperimentReport& report, bool header = true);
std::string report_json(const ExperimentReport& report);
std::string report_markdown(const ExperimentReport& report,
                            std::span<const StageTiming> timings = {});

/// Writes report.csv, report.json, summary.md, study.csv, timings.json and
/// folds/*.json into `out_dir`. Content is rendered fully before any file is
/// written.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

ExperimentReport load_report(const std::filesystem::path& dir);

struct AuditResult {
  std::vector<std::string> passed;
  std::vector<std::string> failed;
  bool ok() const { return failed.empty(); }
};

/// Re-checks split and leakage invariants from the files emit_report wrote.
AuditResult audit_artifacts(const std::filesystem::path& dir);

}  // namespace wineqc
