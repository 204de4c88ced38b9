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

#include "wineqc/tune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>

#include "wineqc/kernels.hpp"

namespace wineqc {

const ParamSpec& SearchSpace::at(const std::string& name) const {
  for (const ParamSpec& p : params) {
    if (p.name == name) return p;
  }
  throw ConfigError("search space has no parameter '" + name + "'");
}

void SearchSpace::validate() const {
  for (const ParamSpec& p : params) {
    switch (p.kind) {
      case ParamSpec::Kind::kCategorical:
        if (p.choices.empty()) throw ConfigError("parameter '" + p.name + "' has no choices");
        break;
      case ParamSpec::Kind::kLogReal:
        if (!(p.low > 0.0)) throw ConfigError("parameter '" + p.name + "' needs a positive low");
        [[fallthrough]];
      default:
        if (!(p.low <= p.high)) throw ConfigError("parameter '" + p.name + "' has low > high");
    }
  }
}

namespace {

ParamSpec int_range(std::string name, double lo, double hi) {
  return {std::move(name), ParamSpec::Kind::kInt, lo, hi, {}};
}
ParamSpec real_range(std::string name, double lo, double hi) {
  return {std::move(name), ParamSpec::Kind::kReal, lo, hi, {}};
}
ParamSpec log_range(std::string name, double lo, double hi) {
  return {std::move(name), ParamSpec::Kind::kLogReal, lo, hi, {}};
}
ParamSpec categorical(std::string name, std::vector<std::string> choices) {
  return {std::move(name), ParamSpec::Kind::kCategorical, 0.0, 0.0, std::move(choices)};
}

}  // namespace

SearchSpace default_space(ModelFamily family) {
  SearchSpace s;
  s.family = family;
  auto& p = s.params;
  switch (family) {
    case ModelFamily::kForest:
      p = {int_range("n_estimators", 200, 1000),
           int_range("max_depth", 10, 30),
           categorical("bootstrap", {"true", "false"}),
           int_range("min_samples_leaf", 1, 15),
           categorical("class_weight", {"balanced", "none"}),
           int_range("min_samples_split", 2, 20),
           categorical("max_features", {"sqrt", "log2", "fraction"}),
           real_range("max_features_fraction", 0.3, 1.0),
           categorical("criterion", {"gini", "entropy", "log_loss"})};
      break;
    case ModelFamily::kGbFirstOrder:
      p = {int_range("n_estimators", 100, 600),
           int_range("max_depth", 8, 14),
           log_range("learning_rate", 0.005, 0.4),
           real_range("subsample", 0.7, 1.0),
           int_range("min_samples_leaf", 1, 8),
           categorical("class_weight", {"balanced", "none"}),
           int_range("min_samples_split", 2, 15),
           categorical("max_features", {"sqrt", "log2", "none"}),
           real_range("validation_fraction", 0.10, 0.20)};
      break;
    case ModelFamily::kGbSecondOrder:
      p = {int_range("n_estimators", 200, 800),
           int_range("max_depth", 6, 12),
           log_range("learning_rate", 0.01, 0.20),
           real_range("subsample", 0.7, 1.0),
           categorical("class_weight", {"balanced", "none"}),
           real_range("colsample_bytree", 0.6, 1.0),
           real_range("gamma", 0.0, 10.0),
           real_range("min_child_weight", 1.0, 15.0),
           real_range("reg_alpha", 0.0, 2.0),
           real_range("reg_lambda", 1.0, 15.0)};
      break;
    case ModelFamily::kGoss:
      p = {int_range("n_estimators", 300, 1500),
           int_range("max_depth", 10, 20),
           real_range("learning_rate", 0.005, 0.50),
           int_range("min_child_samples", 5, 200),
           categorical("class_weight", {"balanced", "none"}),
           real_range("feature_fraction", 0.4, 1.0),
           categorical("boosting_type", {"goss"}),
           int_range("num_leaves", 100, 500),
           real_range("lambda_l1", 0.0, 10.0),
           real_range("lambda_l2", 0.0, 10.0),
           categorical("extra_trees", {"true", "false"})};
      break;
    case ModelFamily::kOblivious:
      p = {int_range("n_estimators", 100, 500),
           int_range("depth", 6, 10),
           real_range("learning_rate", 0.01, 0.30),
           categorical("class_weight", {"balanced", "none"}),
           real_range("l2_leaf_reg", 1.0, 10.0),
           categorical("bootstrap_type", {"bayesian"}),
           real_range("bagging_temperature", 0.1, 0.9)};
      break;
  }
  return s;
}

ParamMap sample_params(const SearchSpace& space, Rng& rng) {
  space.validate();
  ParamMap out;
  for (const ParamSpec& p : space.params) {
    switch (p.kind) {
      case ParamSpec::Kind::kInt: {
        const auto lo = static_cast<std::int64_t>(std::ceil(p.low));
        const auto hi = static_cast<std::int64_t>(std::floor(p.high));
        out[p.name] = lo + static_cast<std::int64_t>(
                               uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
        break;
      }
      case ParamSpec::Kind::kReal:
        out[p.name] = std::min(p.high, p.low + uniform01(rng) * (p.high - p.low));
        break;
      case ParamSpec::Kind::kLogReal: {
        const double lo = std::log(p.low);
        const double hi = std::log(p.high);
        out[p.name] = std::clamp(std::exp(lo + uniform01(rng) * (hi - lo)), p.low, p.high);
        break;
      }
      case ParamSpec::Kind::kCategorical:
        out[p.name] = p.choices[uniform_index(rng, p.choices.size())];
        break;
    }
  }
  return out;
}

ParamMap RandomSampler::sample(const SearchSpace& space, std::size_t trial) {
  Rng rng(derive_seed(seed_, trial));
  return sample_params(space, rng);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool median_prune_decision(std::span<const double> history, double candidate,
                           std::size_t min_trials) {
  if (history.empty() || history.size() < min_trials) return false;
  return candidate < median({history.begin(), history.end()});
}

std::string status_name(TrialStatus status) {
  switch (status) {
    case TrialStatus::kComplete: return "complete";
    case TrialStatus::kPruned: return "pruned";
    case TrialStatus::kFailed: return "failed";
  }
  return "unknown";
}

std::size_t StudyResult::count(TrialStatus status) const {
  return static_cast<std::size_t>(std::count_if(
      trials.begin(), trials.end(), [&](const TrialRecord& t) { return t.status == status; }));
}

std::vector<FoldData> prepare_folds(const Dataset& train, const FoldPlan& plan, std::uint64_t seed,
                                    ExecPolicy policy, const FitAudit& audit) {
  std::vector<FoldData> folds(plan.folds.size());
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    FoldData& data = folds[f];
    data.train_rows = fold.train_indices;
    data.validation_rows = fold.validation_indices;
    if (audit) audit(f, data.train_rows);
    const Matrix x_train = train.features.select_rows(data.train_rows);
    std::vector<int> y_train;
    for (std::size_t i : data.train_rows) y_train.push_back(train.labels[i]);
    PreparedTraining prepared = prepare_training(x_train, y_train, derive_seed(seed, 0xF0, f), policy);
    data.scaler = std::move(prepared.scaler);
    data.train = std::move(prepared.data);
    data.resample = prepared.report;
    data.validation_x = data.scaler.apply(train.features.select_rows(data.validation_rows));
    for (std::size_t i : data.validation_rows) data.validation_y.push_back(train.labels[i]);
  }
  return folds;
}

namespace {

class StudyHistory {
 public:
  explicit StudyHistory(std::size_t steps) : steps_(steps) {}

  std::vector<double> at_step(std::size_t step) {
    std::lock_guard lock(mutex_);
    return steps_[step];
  }

  void add_complete(std::span<const double> intermediate) {
    std::lock_guard lock(mutex_);
    for (std::size_t s = 0; s < intermediate.size(); ++s) steps_[s].push_back(intermediate[s]);
  }

 private:
  std::mutex mutex_;
  std::vector<std::vector<double>> steps_;
};

}  // namespace

StudyResult run_study(const Dataset& train, const FoldPlan& plan, const SearchSpace& space,
                      const StudyConfig& config, const FitAudit& audit) {
  if (config.budget < 1) throw ConfigError("run_study: budget must be at least 1");
  if (plan.folds.empty()) throw ConfigError("run_study: empty fold plan");
  space.validate();
  const bool concurrent = config.jobs > 1;
  const ExecPolicy inner = concurrent ? ExecPolicy::kSerial : config.policy;

  const std::vector<FoldData> folds = prepare_folds(train, plan, config.seed, inner, audit);
  RandomSampler sampler(config.seed);
  StudyResult result;
  result.budget = config.budget;
  result.seed = config.seed;
  result.trials.resize(config.budget);
  for (std::size_t t = 0; t < config.budget; ++t) {
    result.trials[t].id = t;
    result.trials[t].params =
        config.fixed_params ? *config.fixed_params : sampler.sample(space, t);
  }
  for (const FoldData& f : folds) result.fold_resample.push_back(f.resample);

  StudyHistory history(folds.size());
  auto run_trial = [&](std::size_t t) {
    TrialRecord& trial = result.trials[t];
    const auto start = std::chrono::steady_clock::now();
    try {
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const FoldData& fold = folds[f];
        const std::vector<double> weights = class_weights_for(trial.params, fold.train.y);
        const FittedModel model =
            fit_model(config.family, trial.params, fold.train.x, fold.train.y, weights,
                      derive_seed(config.seed, t, f), inner);
        const Matrix proba = align_proba(model.predict_proba(fold.validation_x),
                                         model.class_vocab(), train.class_vocab);
        MetricsReport metrics = evaluate(fold.validation_y, proba, train.class_vocab);
        trial.intermediate.push_back(metrics.weighted_f1);
        trial.folds.push_back(std::move(metrics));
        if (config.pruner.enabled && f + 1 < folds.size() &&
            median_prune_decision(history.at_step(f), trial.intermediate.back(),
                                  config.pruner.min_trials)) {
          trial.status = TrialStatus::kPruned;
          break;
        }
      }
      if (trial.status == TrialStatus::kComplete) {
        double sum = 0.0;
        for (double v : trial.intermediate) sum += v;
        trial.score = sum / static_cast<double>(trial.intermediate.size());
        history.add_complete(trial.intermediate);
      }
    } catch (const std::exception& e) {
      trial.status = TrialStatus::kFailed;
      trial.error = e.what();
    }
    trial.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  if (concurrent) {
    const auto n = static_cast<std::int64_t>(config.budget);
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.jobs)
    for (std::int64_t t = 0; t < n; ++t) run_trial(static_cast<std::size_t>(t));
  } else {
    for (std::size_t t = 0; t < config.budget; ++t) run_trial(t);
  }

  bool any = false;
  for (const TrialRecord& trial : result.trials) {
    if (trial.status != TrialStatus::kComplete) continue;
    if (!any || trial.score > result.trials[result.best].score) {
      result.best = trial.id;
      any = true;
    }
  }
  if (!any) {
    std::string reason = "run_study: no trial completed";
    for (const TrialRecord& trial : result.trials) {
      if (!trial.error.empty()) {
        reason += " (first failure: " + trial.error + ")";
        break;
      }
    }
    throw Error(reason);
  }
  return result;
}

void write_study_csv(std::ostream& out, const StudyResult& study, const std::string& phase) {
  for (const TrialRecord& trial : study.trials) {
    for (std::size_t s = 0; s < trial.intermediate.size(); ++s) {
      if (!phase.empty()) out << phase << ',';
      const nlohmann::json value = trial.intermediate[s];
      out << trial.id << ',' << s << ',' << value.dump() << ',' << status_name(trial.status)
          << '\n';
    }
    if (trial.intermediate.empty()) {
      if (!phase.empty()) out << phase << ',';
      out << trial.id << ",,," << status_name(trial.status) << '\n';
    }
  }
}

void to_json(nlohmann::json& j, const TrialRecord& t) {
  j = nlohmann::json{{"id", t.id},
                     {"params", params_to_json(t.params)},
                     {"intermediate", t.intermediate},
                     {"status", status_name(t.status)},
                     {"score", t.score}};
  if (!t.error.empty()) j["error"] = t.error;
}

void from_json(const nlohmann::json& j, TrialRecord& t) {
  j.at("id").get_to(t.id);
  t.params = params_from_json(j.at("params"));
  j.at("intermediate").get_to(t.intermediate);
  const std::string status = j.at("status").get<std::string>();
  t.status = status == "complete" ? TrialStatus::kComplete
             : status == "pruned" ? TrialStatus::kPruned
                                  : TrialStatus::kFailed;
  j.at("score").get_to(t.score);
  t.error = j.value("error", "");
}

}  // namespace wineqc
