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

#include "deid/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace deid {
namespace {

constexpr std::string_view kOriginal = "original";
constexpr std::size_t kSamplesPerBlock = 1 << 14;

// dataset -> variant -> algorithm -> f1
using ScoreIndex =
    std::map<std::string, std::map<std::string, std::map<std::string, double>>>;

ScoreIndex index_solutions(std::span<const Solution> solutions) {
  ScoreIndex idx;
  for (const auto& s : solutions) idx[s.dataset][s.variant][s.algorithm] = s.f1;
  return idx;
}

double best_of(const std::map<std::string, double>& by_algorithm) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [_, f1] : by_algorithm) best = std::max(best, f1);
  return best;
}

// Variants of `dataset` with the smallest risk among those that also have
// solutions.
std::vector<std::string> minimum_risk_variants(
    const std::string& dataset,
    const std::map<std::string, std::map<std::string, double>>& variants,
    const ValueTable& risks) {
  auto it = risks.find(dataset);
  if (it == risks.end()) return {};
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& [variant, risk] : it->second) {
    if (variant != kOriginal && variants.contains(variant)) lowest = std::min(lowest, risk);
  }
  std::vector<std::string> out;
  for (const auto& [variant, risk] : it->second) {
    if (variant != kOriginal && variants.contains(variant) && risk == lowest) {
      out.push_back(variant);
    }
  }
  return out;
}

}  // namespace

double percentage_difference(double candidate, double baseline) {
  if (baseline == 0) throw Error("undefined baseline: percentage difference against 0");
  return (candidate - baseline) / baseline * 100.0;
}

nlohmann::json BayesOutcome::to_json() const {
  return {{"p_lose", p_lose},
          {"p_rope", p_rope},
          {"p_win", p_win},
          {"rope", {rope.lo, rope.hi}},
          {"n_samples", n_samples},
          {"counts", {{"lose", counts[0]}, {"rope", counts[1]}, {"win", counts[2]}}}};
}

BayesOutcome bayes_sign_test(std::span<const double> diffs, const BayesOptions& options) {
  if (diffs.empty()) throw Error("bayes_sign_test: no differences");
  if (!(options.rope.lo < options.rope.hi)) throw Error("bayes_sign_test: empty rope");
  if (options.n_samples == 0) throw Error("bayes_sign_test: n_samples must be positive");

  BayesOutcome out;
  out.rope = options.rope;
  out.n_samples = options.n_samples;
  for (double d : diffs) {
    if (d < options.rope.lo) {
      ++out.counts[0];
    } else if (d > options.rope.hi) {
      ++out.counts[2];
    } else {
      ++out.counts[1];
    }
  }
  std::array<double, 3> alpha{};
  for (std::size_t j = 0; j < 3; ++j) {
    alpha[j] = options.prior[j] + static_cast<double>(out.counts[j]);
  }

  const std::size_t n_blocks = (options.n_samples + kSamplesPerBlock - 1) / kSamplesPerBlock;
  std::vector<std::array<std::size_t, 3>> wins(n_blocks, {0, 0, 0});
  parallel_for(n_blocks, [&](std::size_t block) {
    Rng rng(derive_seed(options.seed, block));
    std::array<std::gamma_distribution<double>, 3> gamma;
    for (std::size_t j = 0; j < 3; ++j) {
      if (alpha[j] > 0) gamma[j] = std::gamma_distribution<double>(alpha[j], 1.0);
    }
    const std::size_t begin = block * kSamplesPerBlock;
    const std::size_t end = std::min(options.n_samples, begin + kSamplesPerBlock);
    for (std::size_t s = begin; s < end; ++s) {
      std::size_t arg = 0;
      double top = -1;
      for (std::size_t j = 0; j < 3; ++j) {
        const double g = alpha[j] > 0 ? gamma[j](rng) : 0.0;
        if (g > top) {
          top = g;
          arg = j;
        }
      }
      ++wins[block][arg];
    }
  });
  std::array<std::size_t, 3> total{0, 0, 0};
  for (const auto& w : wins) {
    for (std::size_t j = 0; j < 3; ++j) total[j] += w[j];
  }
  const auto n = static_cast<double>(options.n_samples);
  out.p_lose = static_cast<double>(total[0]) / n;
  out.p_rope = static_cast<double>(total[1]) / n;
  out.p_win = static_cast<double>(total[2]) / n;
  return out;
}

// --- Ranks -------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values, RankDirection direction) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return direction == RankDirection::kAscending ? values[a] < values[b]
                                                  : values[a] > values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

RankTable rank_variants(const ValueTable& values, RankDirection direction) {
  RankTable table;
  table.direction = direction;
  if (values.empty()) throw Error("rank_variants: no datasets");
  for (const auto& [variant, _] : values.begin()->second) {
    const bool everywhere = std::all_of(values.begin(), values.end(), [&](const auto& entry) {
      return entry.second.contains(variant);
    });
    if (everywhere) table.variants.push_back(variant);
  }
  if (table.variants.empty()) {
    throw Error("rank_variants: no variant is present in every dataset");
  }
  table.n_datasets = values.size();
  for (const auto& [dataset, by_variant] : values) {
    std::vector<double> v;
    v.reserve(table.variants.size());
    for (const auto& name : table.variants) v.push_back(by_variant.at(name));
    const auto r = average_ranks(v, direction);
    for (std::size_t i = 0; i < table.variants.size(); ++i) {
      table.ranks[dataset][table.variants[i]] = r[i];
      table.mean_rank[table.variants[i]] += r[i] / static_cast<double>(values.size());
    }
  }
  return table;
}

std::string RankTable::to_csv() const {
  std::string out = "variant,mean_rank,n_datasets\n";
  for (const auto& v : variants) {
    out += fmt::format("{},{},{}\n", v, mean_rank.at(v), n_datasets);
  }
  return out;
}

// --- Scenarios ---------------------------------------------------------------

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kVsOriginalBest:
      return "vs_original_best";
    case Scenario::kVsVariantBest:
      return "vs_variant_best";
    case Scenario::kVsLowestRisk:
      return "vs_lowest_risk";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::kVsOriginalBest, Scenario::kVsVariantBest,
                     Scenario::kVsLowestRisk}) {
    if (scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

nlohmann::json ScenarioReport::to_json() const {
  nlohmann::json variants = nlohmann::json::object();
  for (const auto& [variant, by_algorithm] : per_algorithm) {
    nlohmann::json entry = nlohmann::json::object();
    for (const auto& [algorithm, outcome] : by_algorithm) entry[algorithm] = outcome.to_json();
    if (auto it = pooled.find(variant); it != pooled.end()) {
      entry["pooled"] = it->second.to_json();
    }
    variants[variant] = entry;
  }
  return {{"scenario", scenario_name(scenario)}, {"variants", variants}};
}

ScenarioReport compare_scenario(std::span<const Solution> solutions, Scenario scenario,
                                const ValueTable* risks, const BayesOptions& options,
                                Warnings* warnings) {
  if (scenario == Scenario::kVsLowestRisk && risks == nullptr) {
    throw Error("vs_lowest_risk needs risk reports");
  }
  const auto idx = index_solutions(solutions);
  std::map<std::string, std::map<std::string, std::vector<double>>> diffs;
  std::map<std::string, std::vector<double>> pooled;

  for (const auto& [dataset, variants] : idx) {
    std::optional<double> dataset_baseline;
    if (scenario == Scenario::kVsOriginalBest) {
      auto it = variants.find(std::string(kOriginal));
      if (it == variants.end()) {
        warn(warnings, fmt::format("{}: no original solutions for '{}'",
                                   scenario_name(scenario), dataset));
        continue;
      }
      dataset_baseline = best_of(it->second);
    } else if (scenario == Scenario::kVsLowestRisk) {
      const auto lowest = minimum_risk_variants(dataset, variants, *risks);
      if (lowest.empty()) {
        warn(warnings, fmt::format("{}: no risk reports for '{}'", scenario_name(scenario),
                                   dataset));
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& v : lowest) best = std::max(best, best_of(variants.at(v)));
      dataset_baseline = best;
    }

    for (const auto& [variant, by_algorithm] : variants) {
      if (variant == kOriginal) continue;
      const double baseline = dataset_baseline ? *dataset_baseline : best_of(by_algorithm);
      if (baseline == 0) {
        warn(warnings, fmt::format("{}: zero baseline for '{}' / '{}'; skipped",
                                   scenario_name(scenario), dataset, variant));
        continue;
      }
      for (const auto& [algorithm, f1] : by_algorithm) {
        const double d = percentage_difference(f1, baseline);
        diffs[variant][algorithm].push_back(d);
        pooled[variant].push_back(d);
      }
    }
  }

  BayesOptions opts = options;
  if (scenario == Scenario::kVsVariantBest) opts.prior[2] = 0.0;
  ScenarioReport report;
  report.scenario = scenario;
  for (const auto& [variant, by_algorithm] : diffs) {
    for (const auto& [algorithm, d] : by_algorithm) {
      opts.seed = derive_seed(options.seed, fmt::format("{}/{}", variant, algorithm));
      report.per_algorithm[variant][algorithm] = bayes_sign_test(d, opts);
    }
    opts.seed = derive_seed(options.seed, variant);
    report.pooled[variant] = bayes_sign_test(pooled.at(variant), opts);
  }
  return report;
}

FiveNumber five_number_summary(std::span<const double> values) {
  std::vector<double> sorted;
  for (double v : values) {
    if (!std::isnan(v)) sorted.push_back(v);
  }
  if (sorted.empty()) throw Error("five_number_summary: no values");
  std::sort(sorted.begin(), sorted.end());
  return {sorted.front(),
          quantile_sorted(sorted, 0.25),
          quantile_sorted(sorted, 0.5),
          quantile_sorted(sorted, 0.75),
          sorted.back(),
          sorted.size()};
}

std::map<std::string, std::vector<double>> lowest_risk_differences(
    std::span<const Solution> solutions, const ValueTable& risks, Warnings* warnings) {
  const auto idx = index_solutions(solutions);
  std::map<std::string, std::vector<double>> out;
  for (const auto& [dataset, variants] : idx) {
    auto original = variants.find(std::string(kOriginal));
    const auto lowest = minimum_risk_variants(dataset, variants, risks);
    if (original == variants.end() || lowest.empty()) {
      warn(warnings, fmt::format("lowest-risk differences: '{}' lacks original or risk data",
                                 dataset));
      continue;
    }
    for (const auto& [algorithm, base] : original->second) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& v : lowest) {
        const auto& by_algorithm = variants.at(v);
        if (auto it = by_algorithm.find(algorithm); it != by_algorithm.end()) {
          best = std::max(best, it->second);
        }
      }
      if (!std::isfinite(best)) continue;
      if (base == 0) {
        warn(warnings, fmt::format("lowest-risk differences: zero original F-score for "
                                   "'{}' / {}",
                                   dataset, algorithm));
        continue;
      }
      out[algorithm].push_back(percentage_difference(best, base));
    }
  }
  return out;
}

}  // namespace deid
