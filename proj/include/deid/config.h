// Copyright 2026 The deidbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration. The file format is INI-style: top-level `key = value`
// pairs followed by `[section]` blocks; one `[dataset.<name>]` section per
// input. See docs/config.md for the grammar and every key.

#ifndef DEID_CONFIG_H_
#define DEID_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deid/learning.h"
#include "deid/linkage.h"
#include "deid/stats.h"
#include "deid/transforms.h"

namespace deid {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DatasetInput {
  std::string name;
  std::filesystem::path path;
  std::string target;
  std::optional<std::vector<std::string>> qi;
};

enum class LearnerMode { kBuiltin, kExternal };

struct RunConfig {
  std::vector<DatasetInput> datasets;
  std::filesystem::path out = "deid-out";
  std::uint64_t seed = 0;
  bool force = false;
  std::size_t jobs = 0;  // 0 = all hardware threads

  ParameterGrids grids;
  TransformOptions transform;
  SimilarityConfig similarity;

  LearnerMode learners = LearnerMode::kBuiltin;
  LearnerSpec builtin = BuiltinLogisticRegression::default_spec();
  EvalOptions eval;
  // Where the external harness writes its JSON lines; relative to `out`.
  std::filesystem::path external_results = "external_results.jsonl";
  std::vector<std::string> external_algorithms = {
      "random_forest", "bagging", "boosting", "logistic_regression", "neural_network"};

  BayesOptions bayes;
  std::vector<Scenario> scenarios = {Scenario::kVsOriginalBest, Scenario::kVsVariantBest,
                                     Scenario::kVsLowestRisk};
};

// Relative dataset paths resolve against the config file's directory.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Throws ConfigError for missing inputs or out-of-range values.
void validate(const RunConfig& config);

}  // namespace deid

#endif  // DEID_CONFIG_H_
