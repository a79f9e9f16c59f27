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

// Distance-based record linkage of a transformed variant against its
// original. For every variant record the best-scoring original record is
// found among the candidate pairs; the score is the sum of per-attribute
// similarities over the QI columns both tables still share. A record is at
// risk when that best score reaches match_fraction * |shared QI|.

#ifndef DEID_LINKAGE_H_
#define DEID_LINKAGE_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/tabular.h"

namespace deid {

struct Blocking {
  enum class Kind {
    kAuto,                // full index up to auto_threshold rows, else sorted neighborhood
    kNone,                // full cross product
    kSortedNeighborhood,  // key ranks within +/- window / 2
    kBlockOn,             // equal values on `column`
  };
  Kind kind = Kind::kAuto;
  std::size_t window = 100;
  // Key for sorted neighborhood (empty picks the highest-cardinality shared
  // numeric column) or the blocking column for kBlockOn.
  std::string column;
  std::size_t auto_threshold = 5000;

  static Blocking none() { return of(Kind::kNone, 0, {}); }
  static Blocking sorted_neighborhood(std::size_t window, std::string key = {}) {
    return of(Kind::kSortedNeighborhood, window, std::move(key));
  }
  static Blocking block_on(std::string column) {
    return of(Kind::kBlockOn, 0, std::move(column));
  }

  std::string describe() const;

 private:
  static Blocking of(Kind kind, std::size_t window, std::string column) {
    Blocking b;
    b.kind = kind;
    b.window = window;
    b.column = std::move(column);
    return b;
  }
};

Blocking parse_blocking(const std::string& text, std::size_t window = 100,
                        std::string column = {});

struct SimilarityConfig {
  // Per-column kernel scale; columns not listed use the standard deviation of
  // the original column (1 when that is zero).
  std::map<std::string, double> numeric_scale;
  double match_fraction = 0.7;
  Blocking blocking;
  // Write the per-record scores beside the JSON report.
  bool write_scores = false;
};

struct CandidatePairs {
  // (original row, variant row)
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct RiskReport {
  std::string variant;
  std::vector<double> best_scores;  // per variant row
  std::vector<std::size_t> matched;  // ascending variant rows
  std::size_t matched_count = 0;
  std::size_t n_rows = 0;
  std::size_t shared_qi = 0;
  double risk = 0;
  double threshold = 0.7;
  std::string blocking;
  std::optional<std::string> scores_path;

  nlohmann::json to_json() const;
  // Reads the summary fields; per-record scores are not part of the JSON.
  static RiskReport from_json(const nlohmann::json& j);
};

// 1 for equal nominal values, exp(-|a - b| / scale) for numeric values, 0 if
// either side is missing.
double attribute_similarity(const std::optional<std::string>& original,
                            const std::optional<std::string>& variant);
double attribute_similarity(double original, double variant, double scale);

// QI columns of `original` that survive in `variant`, in original order.
std::vector<std::string> shared_qi_columns(const Dataset& original, const Dataset& variant);

CandidatePairs candidate_pairs(const Dataset& original, const Dataset& variant,
                               const SimilarityConfig& cfg, Warnings* warnings = nullptr);

RiskReport assess_risk(const Dataset& original, const Dataset& variant,
                       const SimilarityConfig& cfg, std::string variant_label = {},
                       Warnings* warnings = nullptr);

// Per-record audit file: variant_row,best_score,matched.
std::string scores_csv(const RiskReport& report);

}  // namespace deid

#endif  // DEID_LINKAGE_H_
