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

// wineqc: tune, evaluate and audit wine-quality classifiers.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "wineqc/pipeline.hpp"

namespace {

using namespace wineqc;

int run_command(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const ExperimentResult result = run_experiment(config);
  emit_report(result, out_dir);
  std::cout << report_csv(result.report);
  std::cerr << "wrote " << out_dir.string() << "\n";
  return 0;
}

int report_command(const std::filesystem::path& in_dir, const std::string& format) {
  const ExperimentReport report = load_report(in_dir);
  if (format == "csv") {
    std::cout << report_csv(report);
  } else if (format == "json") {
    std::cout << report_json(report);
  } else {
    std::cout << report_markdown(report);
  }
  return 0;
}

int audit_command(const std::filesystem::path& in_dir) {
  const AuditResult audit = audit_artifacts(in_dir);
  for (const std::string& name : audit.passed) std::cout << "PASS " << name << "\n";
  for (const std::string& name : audit.failed) std::cout << "FAIL " << name << "\n";
  return audit.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wine quality classification experiments"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string model = "forest";
  std::string out_dir = "results";
  bool no_prune = false;
  bool serial = false;
  std::uint64_t seed = config.seed;
  std::size_t trials = config.trials;

  CLI::App* run = app.add_subcommand("run", "Tune on the training split and score the test split");
  run->add_option("--data", config.data_path, "Semicolon-delimited wine CSV")->required();
  run->add_option("--color", config.color, "Dataset tag used in reports")
      ->check(CLI::IsMember({"red", "white"}));
  run->add_option("--model", model, "forest | gb1 | gb2 | goss | oblivious")
      ->check(CLI::IsMember({"forest", "gb1", "gb2", "goss", "oblivious"}));
  run->add_option("--trials", trials, "Search budget per phase")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--folds", config.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  run->add_option("--test-fraction", config.test_fraction, "Held-out share")
      ->check(CLI::Range(0.01, 0.99));
  run->add_option("--jobs", config.jobs, "Concurrent trials")->check(CLI::PositiveNumber);
  run->add_option("--phase", config.phases, "full | selected | both")
      ->check(CLI::IsMember({"full", "selected", "both"}));
  run->add_option("--top-k", config.selection.top_k, "Features kept after ranking");
  run->add_option("--min-importance", config.selection.min_importance, "Importance cutoff");
  run->add_flag("--no-prune", no_prune, "Disable median pruning");
  run->add_flag("--serial", serial, "Use the serial reference kernels");
  run->add_option("--out", out_dir, "Output directory");

  std::string in_dir = "results";
  std::string format = "md";
  CLI::App* report = app.add_subcommand("report", "Render a finished run");
  report->add_option("--in", in_dir, "Directory written by run")->required();
  report->add_option("--format", format, "csv | json | md")
      ->check(CLI::IsMember({"csv", "json", "md"}));

  CLI::App* audit = app.add_subcommand("audit", "Re-check split and leakage invariants");
  audit->add_option("--in", in_dir, "Directory written by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      config.family = parse_family(model);
      config.seed = seed;
      config.trials = trials;
      config.prune = !no_prune;
      config.policy = serial ? ExecPolicy::kSerial : ExecPolicy::kParallel;
      return run_command(config, out_dir);
    }
    if (report->parsed()) return report_command(in_dir, format);
    return audit_command(in_dir);
  } catch (const StageError& e) {
    std::cerr << "wineqc: stage " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "wineqc: " << e.what() << "\n";
  }
  return 2;
}
