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

// Comparison statistics over experiment results: percentage differences,
// the Bayes sign test with a region of practical equivalence, rank tables
// and the three baseline scenarios.

#ifndef DEID_STATS_H_
#define DEID_STATS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/base.h"

namespace deid {

// (candidate - baseline) / baseline * 100. Throws when baseline is 0.
double percentage_difference(double candidate, double baseline);

struct Rope {
  double lo = -1.0;
  double hi = 1.0;
};

struct BayesOptions {
  Rope rope;
  std::size_t n_samples = 100000;
  // Dirichlet prior concentration for (lose, rope, win).
  std::array<double, 3> prior = {1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
};

struct BayesOutcome {
  double p_lose = 0;
  double p_rope = 0;
  double p_win = 0;
  Rope rope;
  std::size_t n_samples = 0;
  std::array<std::size_t, 3> counts = {0, 0, 0};  // lose, rope, win

  nlohmann::json to_json() const;
};

// Counts diffs below, inside (closed) and above the rope, then estimates by
// Monte Carlo how often each component is the largest in a draw from
// Dirichlet(prior + counts). A zero prior on a component with zero count
// removes that component.
BayesOutcome bayes_sign_test(std::span<const double> diffs, const BayesOptions& options);

// --- Ranks -------------------------------------------------------------------

enum class RankDirection {
  kAscending,   // rank 1 = smallest value (risk: high rank = high risk)
  kDescending,  // rank 1 = largest value (performance: low rank = best)
};

// dataset -> variant -> value
using ValueTable = std::map<std::string, std::map<std::string, double>>;

struct RankTable {
  RankDirection direction = RankDirection::kAscending;
  std::vector<std::string> variants;  // present in every dataset
  std::map<std::string, std::map<std::string, double>> ranks;  // dataset -> variant -> rank
  std::map<std::string, double> mean_rank;
  std::size_t n_datasets = 0;

  std::string to_csv() const;
};

// Average ranks for ties. Only variants present in every dataset take part;
// throws when none is.
RankTable rank_variants(const ValueTable& values, RankDirection direction);

// Average-tie ranks of `values` (1-based).
std::vector<double> average_ranks(std::span<const double> values, RankDirection direction);

// --- Scenarios ---------------------------------------------------------------

enum class Scenario { kVsOriginalBest, kVsVariantBest, kVsLowestRisk };

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

// One solution: the mean test F-score of an algorithm on a dataset variant.
// The original dataset uses variant "original".
struct Solution {
  std::string dataset;
  std::string variant;
  std::string algorithm;
  double f1 = 0;
};

struct ScenarioReport {
  Scenario scenario = Scenario::kVsOriginalBest;
  // variant -> algorithm -> outcome over datasets
  std::map<std::string, std::map<std::string, BayesOutcome>> per_algorithm;
  // variant -> outcome over datasets and algorithms
  std::map<std::string, BayesOutcome> pooled;

  nlohmann::json to_json() const;
};

// Baselines per dataset:
//   kVsOriginalBest  best F-score of the original over all algorithms;
//   kVsVariantBest   best F-score of the candidate's own variant (no wins
//                    are possible, so the win component is dropped);
//   kVsLowestRisk    best F-score among the dataset's minimum-risk variants.
// Candidates are every non-original solution. Datasets whose baseline is 0
// are skipped with a warning. `risks` (dataset -> variant -> risk) is
// required for kVsLowestRisk.
ScenarioReport compare_scenario(std::span<const Solution> solutions, Scenario scenario,
                                const ValueTable* risks, const BayesOptions& options,
                                Warnings* warnings = nullptr);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t n = 0;
};

FiveNumber five_number_summary(std::span<const double> values);

// Per algorithm: for each dataset, the best F-score among its minimum-risk
// variants against the original's F-score for that algorithm.
std::map<std::string, std::vector<double>> lowest_risk_differences(
    std::span<const Solution> solutions, const ValueTable& risks,
    Warnings* warnings = nullptr);

}  // namespace deid

#endif  // DEID_STATS_H_
