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

#include "wineqc/model.hpp"

#include <algorithm>
#include <cmath>

#include "wineqc/data.hpp"

namespace wineqc {

std::string family_token(ModelFamily family) {
  switch (family) {
    case ModelFamily::kForest: return "forest";
    case ModelFamily::kGbFirstOrder: return "gb1";
    case ModelFamily::kGbSecondOrder: return "gb2";
    case ModelFamily::kGoss: return "goss";
    case ModelFamily::kOblivious: return "oblivious";
  }
  return "unknown";
}

std::string family_display_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kForest: return "RandomForest";
    case ModelFamily::kGbFirstOrder: return "GradientBoosting";
    case ModelFamily::kGbSecondOrder: return "SecondOrderGBM";
    case ModelFamily::kGoss: return "GossLeafwiseGBM";
    case ModelFamily::kOblivious: return "ObliviousGBM";
  }
  return "unknown";
}

ModelFamily parse_family(const std::string& token) {
  for (ModelFamily f : kAllFamilies) {
    if (family_token(f) == token) return f;
  }
  throw ConfigError("unknown model family '" + token +
                    "' (expected forest, gb1, gb2, goss or oblivious)");
}

namespace {

const ParamValue& lookup(const ParamMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

std::int64_t int_or(const ParamMap& p, const std::string& name, std::int64_t fallback) {
  return p.contains(name) ? param_int(p, name) : fallback;
}

double real_or(const ParamMap& p, const std::string& name, double fallback) {
  return p.contains(name) ? param_real(p, name) : fallback;
}

std::string str_or(const ParamMap& p, const std::string& name, const std::string& fallback) {
  return p.contains(name) ? param_str(p, name) : fallback;
}

std::size_t positive(std::int64_t v, const std::string& name) {
  if (v < 1) throw ConfigError("parameter '" + name + "' must be positive");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& v, const std::string& name) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("parameter '" + name + "' must be true or false");
}

}  // namespace

std::int64_t param_int(const ParamMap& params, const std::string& name) {
  const ParamValue& v = lookup(params, name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw ConfigError("parameter '" + name + "' is not an integer");
}

double param_real(const ParamMap& params, const std::string& name) {
  const ParamValue& v = lookup(params, name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError("parameter '" + name + "' is not numeric");
}

const std::string& param_str(const ParamMap& params, const std::string& name) {
  const ParamValue& v = lookup(params, name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("parameter '" + name + "' is not categorical");
}

std::string param_to_string(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  nlohmann::json j = std::get<double>(value);
  return j.dump();
}

nlohmann::json params_to_json(const ParamMap& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : params) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

ParamMap params_from_json(const nlohmann::json& j) {
  ParamMap params;
  for (const auto& [name, value] : j.items()) {
    if (value.is_number_integer()) {
      params[name] = value.get<std::int64_t>();
    } else if (value.is_number_float()) {
      params[name] = value.get<double>();
    } else {
      params[name] = value.get<std::string>();
    }
  }
  return params;
}

ForestConfig forest_config(const ParamMap& p, std::uint64_t seed, ExecPolicy policy) {
  ForestConfig c;
  c.num_trees = positive(int_or(p, "n_estimators", 100), "n_estimators");
  c.tree.max_depth = static_cast<std::size_t>(std::max<std::int64_t>(0, int_or(p, "max_depth", 0)));
  c.tree.min_samples_leaf = positive(int_or(p, "min_samples_leaf", 1), "min_samples_leaf");
  c.tree.min_samples_split = positive(int_or(p, "min_samples_split", 2), "min_samples_split");
  const std::string mode = str_or(p, "max_features", "sqrt");
  if (mode == "sqrt") {
    c.tree.max_features = {MaxFeatures::Kind::kSqrt, 1.0};
  } else if (mode == "log2") {
    c.tree.max_features = {MaxFeatures::Kind::kLog2, 1.0};
  } else if (mode == "fraction") {
    c.tree.max_features = {MaxFeatures::Kind::kFraction, real_or(p, "max_features_fraction", 1.0)};
  } else if (mode == "none") {
    c.tree.max_features = {MaxFeatures::Kind::kAll, 1.0};
  } else {
    throw ConfigError("unknown max_features '" + mode + "'");
  }
  const std::string criterion = str_or(p, "criterion", "gini");
  if (criterion == "gini") {
    c.tree.criterion = Criterion::kGini;
  } else if (criterion == "entropy") {
    c.tree.criterion = Criterion::kEntropy;
  } else if (criterion == "log_loss") {
    c.tree.criterion = Criterion::kLogLoss;
  } else {
    throw ConfigError("unknown criterion '" + criterion + "'");
  }
  c.bootstrap = parse_bool(str_or(p, "bootstrap", "true"), "bootstrap");
  c.seed = seed;
  c.policy = policy;
  return c;
}

BoostConfig boost_config(ModelFamily family, const ParamMap& p, std::uint64_t seed,
                         ExecPolicy policy) {
  BoostConfig c;
  c.seed = seed;
  c.policy = policy;
  c.rounds = positive(int_or(p, "n_estimators", 100), "n_estimators");
  c.learning_rate = real_or(p, "learning_rate", 0.1);
  switch (family) {
    case ModelFamily::kGbFirstOrder: {
      c.max_depth = positive(int_or(p, "max_depth", 3), "max_depth");
      c.subsample = real_or(p, "subsample", 1.0);
      c.min_samples_leaf = positive(int_or(p, "min_samples_leaf", 1), "min_samples_leaf");
      c.min_samples_split = positive(int_or(p, "min_samples_split", 2), "min_samples_split");
      c.validation_fraction = real_or(p, "validation_fraction", 0.1);
      const std::string mode = str_or(p, "max_features", "none");
      if (mode == "sqrt") {
        c.max_features = {MaxFeatures::Kind::kSqrt, 1.0};
      } else if (mode == "log2") {
        c.max_features = {MaxFeatures::Kind::kLog2, 1.0};
      } else if (mode == "none") {
        c.max_features = {MaxFeatures::Kind::kAll, 1.0};
      } else {
        throw ConfigError("unknown max_features '" + mode + "'");
      }
      break;
    }
    case ModelFamily::kGbSecondOrder:
      c.growth = Growth::kLevel;
      c.max_depth = positive(int_or(p, "max_depth", 6), "max_depth");
      c.subsample = real_or(p, "subsample", 1.0);
      c.column_fraction = real_or(p, "colsample_bytree", 1.0);
      c.gamma = real_or(p, "gamma", 0.0);
      c.min_child_weight = real_or(p, "min_child_weight", 1.0);
      c.alpha_reg = real_or(p, "reg_alpha", 0.0);
      c.lambda_reg = real_or(p, "reg_lambda", 1.0);
      break;
    case ModelFamily::kGoss:
      c.growth = Growth::kLeafWise;
      c.max_depth = positive(int_or(p, "max_depth", 10), "max_depth");
      c.min_samples_leaf = positive(int_or(p, "min_child_samples", 20), "min_child_samples");
      c.column_fraction = real_or(p, "feature_fraction", 1.0);
      c.num_leaves = positive(int_or(p, "num_leaves", 31), "num_leaves");
      c.alpha_reg = real_or(p, "lambda_l1", 0.0);
      c.lambda_reg = real_or(p, "lambda_l2", 0.0);
      c.extra_trees = parse_bool(str_or(p, "extra_trees", "false"), "extra_trees");
      c.min_child_weight = 1e-3;
      c.goss.enabled = str_or(p, "boosting_type", "goss") == "goss";
      break;
    case ModelFamily::kOblivious:
      c.growth = Growth::kOblivious;
      c.max_depth = positive(int_or(p, "depth", 6), "depth");
      c.lambda_reg = real_or(p, "l2_leaf_reg", 3.0);
      if (str_or(p, "bootstrap_type", "bayesian") == "bayesian") {
        c.bagging_temperature = real_or(p, "bagging_temperature", 1.0);
      }
      break;
    case ModelFamily::kForest:
      throw ConfigError("boost_config: forest is not a booster");
  }
  return c;
}

Matrix FittedModel::predict_proba(const Matrix& x) const {
  if (const auto* f = forest()) return f->predict_proba(x);
  if (const auto* b = boost()) return b->predict_proba(x);
  throw ConfigError("predict_proba: model is not fitted");
}

const std::vector<int>& FittedModel::class_vocab() const {
  if (const auto* f = forest()) return f->class_vocab;
  if (const auto* b = boost()) return b->class_vocab;
  throw ConfigError("class_vocab: model is not fitted");
}

std::vector<double> FittedModel::importance() const {
  if (const auto* f = forest()) return mdi_importance(*f);
  if (const auto* b = boost()) return gain_importance(*b);
  throw ConfigError("importance: model is not fitted");
}

nlohmann::json FittedModel::to_json(std::span<const std::string> feature_names) const {
  if (const auto* f = forest()) return forest_to_json(*f, feature_names);
  if (const auto* b = boost()) return boost_to_json(*b);
  return nullptr;
}

FittedModel fit_model(ModelFamily family, const ParamMap& params, const Matrix& x,
                      std::span<const int> y, std::span<const double> weights, std::uint64_t seed,
                      ExecPolicy policy) {
  switch (family) {
    case ModelFamily::kForest:
      return FittedModel(fit_random_forest(x, y, weights, forest_config(params, seed, policy)));
    case ModelFamily::kGbFirstOrder:
      return FittedModel(
          fit_gbm_first_order(x, y, weights, boost_config(family, params, seed, policy)));
    case ModelFamily::kGbSecondOrder:
    case ModelFamily::kGoss:
    case ModelFamily::kOblivious:
      return FittedModel(
          fit_gbm_second_order(x, y, weights, boost_config(family, params, seed, policy)));
  }
  throw ConfigError("fit_model: unknown family");
}

Matrix align_proba(const Matrix& proba, std::span<const int> from, std::span<const int> to) {
  if (proba.cols() != from.size()) throw ConfigError("align_proba: column count mismatch");
  Matrix out(proba.rows(), to.size());
  for (std::size_t a = 0; a < from.size(); ++a) {
    auto it = std::lower_bound(to.begin(), to.end(), from[a]);
    if (it == to.end() || *it != from[a]) {
      throw ConfigError("align_proba: model class " + std::to_string(from[a]) +
                        " is outside the target vocabulary");
    }
    const auto b = static_cast<std::size_t>(it - to.begin());
    for (std::size_t i = 0; i < proba.rows(); ++i) out(i, b) = proba(i, a);
  }
  return out;
}

PreparedTraining prepare_training(const Matrix& x, std::span<const int> y, std::uint64_t seed,
                                  ExecPolicy policy) {
  PreparedTraining out;
  out.scaler = fit_standardizer(x);
  ResampleResult balanced = smote_tomek(out.scaler.apply(x), y, seed, policy);
  out.data = std::move(balanced.data);
  out.report = balanced.report;
  return out;
}

std::vector<double> class_weights_for(const ParamMap& params, std::span<const int> y) {
  const std::string mode = str_or(params, "class_weight", "none");
  if (mode == "balanced") return inverse_frequency_weights(y);
  if (mode == "none") return std::vector<double>(y.size(), 1.0);
  throw ConfigError("unknown class_weight '" + mode + "'");
}

Matrix TrainedPipeline::predict_proba(const Matrix& x_raw, std::span<const int> target_vocab) const {
  return align_proba(model.predict_proba(scaler.apply(x_raw)), model.class_vocab(), target_vocab);
}

TrainedPipeline train_pipeline(ModelFamily family, const ParamMap& params, const Matrix& x_raw,
                               std::span<const int> y, std::uint64_t seed, ExecPolicy policy) {
  PreparedTraining prepared = prepare_training(x_raw, y, derive_seed(seed, 0x52), policy);
  const std::vector<double> weights = class_weights_for(params, prepared.data.y);
  TrainedPipeline out;
  out.model = fit_model(family, params, prepared.data.x, prepared.data.y, weights,
                        derive_seed(seed, 0x4D), policy);
  out.scaler = std::move(prepared.scaler);
  out.resample = prepared.report;
  return out;
}

}  // namespace wineqc
