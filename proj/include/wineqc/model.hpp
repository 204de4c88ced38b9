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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "wineqc/boost.hpp"
#include "wineqc/common.hpp"
#include "wineqc/forest.hpp"
#include "wineqc/resample.hpp"

namespace wineqc {

enum class ModelFamily { kForest, kGbFirstOrder, kGbSecondOrder, kGoss, kOblivious };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::kForest, ModelFamily::kGbFirstOrder,
                                               ModelFamily::kGbSecondOrder, ModelFamily::kGoss,
                                               ModelFamily::kOblivious};

/// CLI token: forest, gb1, gb2, goss, oblivious.
std::string family_token(ModelFamily family);
/// Name used in report rows.
std::string family_display_name(ModelFamily family);
ModelFamily parse_family(const std::string& token);

using ParamValue = std::variant<std::int64_t, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

std::int64_t param_int(const ParamMap& params, const std::string& name);
double param_real(const ParamMap& params, const std::string& name);
const std::string& param_str(const ParamMap& params, const std::string& name);
std::string param_to_string(const ParamValue& value);

// ParamMap lives in std, so these are plain functions rather than ADL hooks.
nlohmann::json params_to_json(const ParamMap& params);
ParamMap params_from_json(const nlohmann::json& j);

/// Learner configs derived from a sampled parameter map.
ForestConfig forest_config(const ParamMap& params, std::uint64_t seed, ExecPolicy policy);
BoostConfig boost_config(ModelFamily family, const ParamMap& params, std::uint64_t seed,
                         ExecPolicy policy);

/// A fitted forest or booster.
class FittedModel {
 public:
  FittedModel() = default;
  explicit FittedModel(ForestModel forest) : impl_(std::move(forest)) {}
  explicit FittedModel(BoostModel boost) : impl_(std::move(boost)) {}

  /// Probabilities with columns following class_vocab().
  Matrix predict_proba(const Matrix& x) const;
  const std::vector<int>& class_vocab() const;
  /// MDI for forests, gain for boosters; sums to 1.
  std::vector<double> importance() const;
  nlohmann::json to_json(std::span<const std::string> feature_names) const;

  const ForestModel* forest() const { return std::get_if<ForestModel>(&impl_); }
  const BoostModel* boost() const { return std::get_if<BoostModel>(&impl_); }

 private:
  std::variant<std::monostate, ForestModel, BoostModel> impl_;
};

FittedModel fit_model(ModelFamily family, const ParamMap& params, const Matrix& x,
                      std::span<const int> y, std::span<const double> weights, std::uint64_t seed,
                      ExecPolicy policy);

/// Reorders probability columns from `from` to `to`; classes the model never
/// saw get probability zero.
Matrix align_proba(const Matrix& proba, std::span<const int> from, std::span<const int> to);

/// Standardized and SMOTE-Tomek balanced training data for one fit.
struct PreparedTraining {
  Standardizer scaler;
  LabeledMatrix data;
  ResampleReport report;
};

PreparedTraining prepare_training(const Matrix& x, std::span<const int> y, std::uint64_t seed,
                                  ExecPolicy policy);

/// Ones, or inverse-frequency weights when class_weight is "balanced".
std::vector<double> class_weights_for(const ParamMap& params, std::span<const int> y);

/// Scaler plus model, applied together at prediction time.
struct TrainedPipeline {
  Standardizer scaler;
  FittedModel model;
  ResampleReport resample;

  Matrix predict_proba(const Matrix& x_raw, std::span<const int> target_vocab) const;
};

TrainedPipeline train_pipeline(ModelFamily family, const ParamMap& params, const Matrix& x_raw,
                               std::span<const int> y, std::uint64_t seed, ExecPolicy policy);

}  // namespace wineqc
