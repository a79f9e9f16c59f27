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

// Stage drivers. Every stage reads and writes under RunConfig::out:
//
//   manifest.json                      variant manifest (transform)
//   <ds>/original.csv                  input minus direct identifiers
//   <ds>/tuning.json                   per-technique risk over each grid
//   <ds>/variants/<label>.csv          one per variant
//   <ds>/variants/<label>.risk.json    risk report (risk)
//   <ds>/splits.json                   test folds (evaluate)
//   <ds>/results/<label>.jsonl         builtin results per variant
//   task.json                          external harness task (evaluate)
//   results.jsonl                      merged EvalResult lines
//   reports/...                        analysis outputs (analyze)
//
// A stage reuses an artifact that already exists unless `force` is set.

#ifndef DEID_PIPELINE_H_
#define DEID_PIPELINE_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/config.h"
#include "deid/learning.h"
#include "deid/linkage.h"
#include "deid/stats.h"
#include "deid/transforms.h"

namespace deid {

class StageError : public Error {
 public:
  using Error::Error;
};

// Paths are relative to the manifest's directory.
struct VariantEntry {
  std::string label;
  std::filesystem::path path;
  VariantSpec spec;
  std::filesystem::path risk_path;
};

struct DatasetEntry {
  std::string name;
  std::string target;
  std::string positive_label;
  std::vector<std::string> qi;
  std::filesystem::path source;
  std::filesystem::path original;
  std::filesystem::path tuning;
  std::vector<Technique> applicable;
  std::map<Technique, double> chosen;
  std::vector<VariantEntry> variants;
  Warnings warnings;
};

struct VariantManifest {
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> datasets;

  const DatasetEntry* find(std::string_view dataset) const;

  nlohmann::json to_json() const;
  static VariantManifest from_json(const nlohmann::json& j);

  // Atomic write.
  void save(const std::filesystem::path& path) const;
  static VariantManifest load(const std::filesystem::path& path);
};

std::filesystem::path manifest_path(const RunConfig& config);
std::filesystem::path task_path(const RunConfig& config);
std::filesystem::path results_path(const RunConfig& config);
std::filesystem::path reports_dir(const RunConfig& config);

// Per-dataset seeds.
std::uint64_t transform_seed(const RunConfig& config, std::string_view dataset);
std::uint64_t split_seed(const RunConfig& config, std::string_view dataset);

// Reads a stored dataset (original or variant) with the manifest's target
// and quasi-identifiers.
Dataset load_original(const RunConfig& config, const DatasetEntry& entry);
Dataset load_variant(const RunConfig& config, const DatasetEntry& entry,
                     const VariantEntry& variant);

// Dataset-level failures become warnings and the dataset is left out; a
// dataset with no applicable technique keeps an entry with no variants.
VariantManifest cmd_transform(const RunConfig& config, Warnings* warnings = nullptr);

// dataset -> risk reports parallel to the manifest's variants.
using RiskTable = std::map<std::string, std::vector<RiskReport>>;

RiskTable cmd_risk(const RunConfig& config, const VariantManifest& manifest,
                   Warnings* warnings = nullptr);

// dataset -> variant -> risk, keyed by family (see VariantSpec::family).
ValueTable risk_values(const VariantManifest& manifest, const RiskTable& risks);

// Default grids for the external harness. Neural-network layer sizes are
// [numerator, denominator] fractions of the feature count.
nlohmann::json external_algorithm_grids(const std::vector<std::string>& algorithms);

nlohmann::json make_task(const RunConfig& config, const VariantManifest& manifest);

// Parses EvalResult JSON lines. Lines of the form {"warning": "..."} go to
// `warnings`. Throws with the line number on schema errors and on
// duplicate or non-contiguous repeats.
std::vector<EvalResult> parse_results(std::string_view text, Warnings* warnings = nullptr);
std::string results_to_jsonl(const std::vector<EvalResult>& results);

// Builtin: runs the logistic-regression protocol for the original and every
// variant, in both settings. External: writes task.json and ingests the
// harness output; throws StageError naming the task file when it is absent.
std::vector<EvalResult> cmd_evaluate(const RunConfig& config, const VariantManifest& manifest,
                                     Warnings* warnings = nullptr);

struct AnalysisReport {
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

AnalysisReport cmd_analyze(const RunConfig& config, const VariantManifest& manifest,
                           const RiskTable& risks, const std::vector<EvalResult>& results,
                           Warnings* warnings = nullptr);

// Loads what earlier stages left on disk; throws StageError listing every
// absent stage.
struct StageInputs {
  VariantManifest manifest;
  RiskTable risks;
  std::vector<EvalResult> results;
};
StageInputs load_stage_inputs(const RunConfig& config);

// transform, risk, evaluate, analyze.
AnalysisReport run_all(const RunConfig& config, Warnings* warnings = nullptr);

}  // namespace deid

#endif  // DEID_PIPELINE_H_
