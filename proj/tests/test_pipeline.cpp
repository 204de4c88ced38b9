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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "synthetic.hpp"
#include "wineqc/pipeline.hpp"

using namespace wineqc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.family = ModelFamily::kGbSecondOrder;
  c.trials = 2;
  c.folds = 3;
  c.seed = 5;
  c.selection.top_k = 2;
  c.policy = ExecPolicy::kSerial;
  return c;
}

const ExperimentResult& shared_run() {
  static const ExperimentResult result = run_experiment(fixtures::synthetic_wine(300, 17), small_config());
  return result;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wineqc_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Selection, CutoffAndTopK) {
  const std::vector<double> imp{0.4, 0.3, 0.2, 0.06, 0.03, 0.01};
  const std::vector<std::string> names{"a", "b", "c", "d", "e", "f"};
  const SelectionResult s = select_features(imp, names, 5, 0.05);
  EXPECT_EQ(s.chosen, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_FALSE(s.fallback);
  EXPECT_EQ(select_features(imp, names, 2, 0.05).chosen, (std::vector<std::size_t>{0, 1}));
}

TEST(Selection, RankingTiesAndFallback) {
  const std::vector<double> imp{0.01, 0.02, 0.02, 0.0};
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const SelectionResult s = select_features(imp, names, 3, 0.05);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.chosen, std::vector<std::size_t>{1});
  ASSERT_EQ(s.ranked.size(), 4u);
  EXPECT_EQ(s.ranked[1].name, "c");
  EXPECT_EQ(s.ranked[3].name, "d");
  EXPECT_THROW(select_features(imp, std::vector<std::string>{"a"}, 3, 0.05), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
  ExperimentConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.phases = "some";
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.test_fraction = 1.0;
  EXPECT_THROW(run_experiment(fixtures::synthetic_wine(50, 1), c), StageError);
}

TEST(Profile, ZeroWorkStageIsCheap) {
  std::vector<StageTiming> timings;
  profile_stage("noop", [] {}, timings);
  const int v = profile_stage("value", [] { return 7; }, timings);
  EXPECT_EQ(v, 7);
  ASSERT_EQ(timings.size(), 2u);
  EXPECT_EQ(timings[0].stage, "noop");
  EXPECT_GE(timings[0].seconds, 0.0);
  EXPECT_LT(timings[0].seconds, 0.010);
  profile_stage("sleep", [] { std::this_thread::sleep_for(std::chrono::milliseconds(20)); }, timings);
  EXPECT_GE(stage_seconds(timings, "sleep"), 0.019);
  EXPECT_EQ(stage_seconds(timings, "absent"), 0.0);
}

TEST(Vault, RecordsWhetherTuningHadFinished) {
  HoldoutVault vault(fixtures::synthetic_wine(10, 2));
  vault.read("early");
  vault.mark_tuning_complete();
  EXPECT_EQ(vault.read("full").size(), 10u);
  vault.read("again");
  ASSERT_EQ(vault.reads().size(), 3u);
  EXPECT_FALSE(vault.reads()[0].after_tuning);
  EXPECT_TRUE(vault.reads()[1].after_tuning);
  EXPECT_FALSE(vault.reads()[2].after_tuning);
}

TEST(Experiment, BothPhasesReportedWithConsistentCounts) {
  const ExperimentResult& r = shared_run();
  const ExperimentReport& rep = r.report;
  EXPECT_EQ(rep.n_total, 300u);
  EXPECT_EQ(rep.n_test, 60u);
  EXPECT_EQ(rep.n_train + rep.n_test, rep.n_total);
  ASSERT_EQ(rep.phases.size(), 2u);
  const PhaseReport* full = rep.phase("full");
  const PhaseReport* selected = rep.phase("selected");
  ASSERT_NE(full, nullptr);
  ASSERT_NE(selected, nullptr);
  EXPECT_EQ(full->features.size(), 5u);
  ASSERT_TRUE(full->selection.has_value());
  EXPECT_EQ(selected->features.size(), full->selection->chosen.size());
  EXPECT_EQ(selected->features.front(), "f0");
  for (const PhaseReport* p : {full, selected}) {
    EXPECT_EQ(p->trials, 2u);
    EXPECT_EQ(p->complete + p->pruned + p->failed, p->trials);
    EXPECT_EQ(p->cv_folds.size(), 3u);
    EXPECT_TRUE(p->fit_rows_disjoint);
    EXPECT_EQ(p->test_counts.total, 60u);
    EXPECT_EQ(p->final_resample.counts_before.total, rep.n_train);
    EXPECT_GT(p->test.weighted_f1, 0.5);
  }
  ASSERT_EQ(rep.test_reads.size(), 2u);
  for (const TestRead& read : rep.test_reads) EXPECT_TRUE(read.after_tuning);
}

TEST(Experiment, CvSpreadIsPopulationStd) {
  const PhaseReport& p = *shared_run().report.phase("full");
  double mean = 0.0, var = 0.0;
  for (const MetricsReport& m : p.cv_folds) mean += m.weighted_f1 / 3.0;
  for (const MetricsReport& m : p.cv_folds) var += (m.weighted_f1 - mean) * (m.weighted_f1 - mean) / 3.0;
  EXPECT_NEAR(p.cv_mean.weighted_f1, mean, 1e-12);
  EXPECT_NEAR(p.cv_std.weighted_f1, std::sqrt(var), 1e-12);
}

TEST(Experiment, SerialRunsProduceIdenticalJson) {
  const ExperimentResult again = run_experiment(fixtures::synthetic_wine(300, 17), small_config());
  EXPECT_EQ(report_json(again.report), report_json(shared_run().report));
}

TEST(Experiment, SinglePhaseModes) {
  ExperimentConfig c = small_config();
  c.phases = "full";
  const ExperimentResult full = run_experiment(fixtures::synthetic_wine(200, 4), c);
  ASSERT_EQ(full.report.phases.size(), 1u);
  EXPECT_EQ(full.report.phases[0].phase, "full");
  c.phases = "selected";
  const ExperimentResult sel = run_experiment(fixtures::synthetic_wine(200, 4), c);
  ASSERT_EQ(sel.report.phases.size(), 1u);
  EXPECT_EQ(sel.report.phases[0].phase, "selected");
  EXPECT_EQ(sel.report.test_reads.size(), 1u);
}

TEST(Report, CsvHeaderAndRows) {
  const std::string csv = report_csv(shared_run().report);
  EXPECT_EQ(csv.rfind(std::string(kReportCsvHeader) + "\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(report_csv(shared_run().report, false).find("Model,"), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
  const ExperimentReport& rep = shared_run().report;
  const ExperimentReport back = nlohmann::json::parse(report_json(rep)).get<ExperimentReport>();
  EXPECT_EQ(back, rep);
}

TEST(Report, MarkdownHasSections) {
  const std::string md = report_markdown(shared_run().report, shared_run().timings);
  for (const char* heading : {"## Timing", "full", "selected"}) {
    EXPECT_NE(md.find(heading), std::string::npos) << heading;
  }
}

TEST(Report, EmptyPhaseListIsAnError) {
  ExperimentResult empty;
  EXPECT_THROW(emit_report(empty, fresh_dir("empty")), StageError);
  EXPECT_FALSE(std::filesystem::exists(fresh_dir("empty") / "report.json"));
}

TEST(Artifacts, EmitLoadAndAudit) {
  const auto dir = fresh_dir("emit");
  emit_report(shared_run(), dir);
  for (const char* name : {"report.csv", "report.json", "summary.md", "study.csv", "timings.json",
                           "folds/holdout.json", "folds/plan.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_EQ(load_report(dir), shared_run().report);
  const AuditResult audit = audit_artifacts(dir);
  for (const std::string& f : audit.failed) ADD_FAILURE() << f;
  EXPECT_GE(audit.passed.size(), 5u);
}

TEST(Artifacts, AuditCatchesRelabelledTestRows) {
  const auto dir = fresh_dir("tamper");
  emit_report(shared_run(), dir);
  const auto path = dir / "folds" / "holdout.json";
  nlohmann::json j = nlohmann::json::parse(std::ifstream(path));
  const std::size_t victim = j.at("test").at(0).get<std::size_t>();
  j["labels"][victim] = j["labels"][victim].get<int>() == 4 ? 6 : 4;
  std::ofstream(path) << j.dump();
  EXPECT_FALSE(audit_artifacts(dir).ok());
}

TEST(Artifacts, AuditCatchesLeakedValidationRow) {
  const auto dir = fresh_dir("leak");
  emit_report(shared_run(), dir);
  const auto path = dir / "folds" / "plan.json";
  nlohmann::json j = nlohmann::json::parse(std::ifstream(path));
  auto& fold = j.at("folds").at(0);
  fold["train"].push_back(fold.at("validation").at(0));
  std::ofstream(path) << j.dump();
  EXPECT_FALSE(audit_artifacts(dir).ok());
}

TEST(Artifacts, MissingDirectoryFailsToLoad) {
  EXPECT_THROW(load_report(fresh_dir("missing")), DataError);
}
