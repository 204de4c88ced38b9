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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wineqc/data.hpp"
#include "wineqc/metrics.hpp"
#include "wineqc/model.hpp"
#include "wineqc/split.hpp"

namespace wineqc {

struct ParamSpec {
  enum class Kind { kInt, kReal, kLogReal, kCategorical };
  std::string name;
  Kind kind = Kind::kReal;
  double low = 0.0;
  double high = 0.0;
  std::vector<std::string> choices;
};

struct SearchSpace {
  ModelFamily family = ModelFamily::kForest;
  std::vector<ParamSpec> params;

  const ParamSpec& at(const std::string& name) const;
  void validate() const;
};

SearchSpace default_space(ModelFamily family);

/// Independent draws per parameter: integers and reals uniform over the
/// closed range, log ranges uniform in log space, categories uniform.
ParamMap sample_params(const SearchSpace& space, Rng& rng);

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual ParamMap sample(const SearchSpace& space, std::size_t trial) = 0;
};

/// Trial t draws from its own stream derive_seed(seed, t).
class RandomSampler : public Sampler {
 public:
  explicit RandomSampler(std::uint64_t seed) : seed_(seed) {}
  ParamMap sample(const SearchSpace& space, std::size_t trial) override;

 private:
  std::uint64_t seed_;
};

struct PrunerConfig {
  bool enabled = true;
  std::size_t min_trials = 5;
};

double median(std::vector<double> values);

/// True iff at least min_trials values are present and candidate is strictly
/// below their median.
bool median_prune_decision(std::span<const double> history, double candidate,
                           std::size_t min_trials = 5);

enum class TrialStatus { kComplete, kPruned, kFailed };
std::string status_name(TrialStatus status);

struct TrialRecord {
  std::size_t id = 0;
  ParamMap params;
  std::vector<double> intermediate;   // validation weighted F1 per finished fold
  std::vector<MetricsReport> folds;   // full metrics per finished fold
  TrialStatus status = TrialStatus::kComplete;
  double score = 0.0;                 // mean of intermediate, complete trials only
  double seconds = 0.0;
  std::string error;
};

/// Standardized, balanced training rows and standardized validation rows of
/// one fold. Built once per fold and shared by every trial.
struct FoldData {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  Standardizer scaler;
  LabeledMatrix train;
  Matrix validation_x;
  std::vector<int> validation_y;
  ResampleReport resample;
};

struct StudyConfig {
  ModelFamily family = ModelFamily::kForest;
  std::size_t budget = 10;
  std::uint64_t seed = 0;
  int jobs = 1;  // > 1 runs trials concurrently
  PrunerConfig pruner;
  ExecPolicy policy = ExecPolicy::kParallel;  // kernels inside a trial when jobs == 1
  std::optional<ParamMap> fixed_params;       // every trial uses these instead of sampling
};

/// Observes which rows each fold fits its scaler and resampler on.
using FitAudit = std::function<void(std::size_t fold, std::span<const std::size_t> fit_rows)>;

struct StudyResult {
  std::vector<TrialRecord> trials;
  std::size_t best = 0;  // index into trials
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::vector<ResampleReport> fold_resample;

  const TrialRecord& best_trial() const { return trials.at(best); }
  std::size_t count(TrialStatus status) const;
};

/// Builds the per-fold data: scaler and SMOTE-Tomek fitted on the fold's
/// training rows only.
std::vector<FoldData> prepare_folds(const Dataset& train, const FoldPlan& plan, std::uint64_t seed,
                                    ExecPolicy policy, const FitAudit& audit = {});

/// Random search with median pruning. Fold order follows the plan. A fold
/// that throws fails its trial; the study fails only if no trial completes.
StudyResult run_study(const Dataset& train, const FoldPlan& plan, const SearchSpace& space,
                      const StudyConfig& config, const FitAudit& audit = {});

/// CSV rows (trial, step, value, status); `phase` is prepended when set.
void write_study_csv(std::ostream& out, const StudyResult& study, const std::string& phase);

void to_json(nlohmann::json& j, const TrialRecord& t);
void from_json(const nlohmann::json& j, TrialRecord& t);

}  // namespace wineqc
