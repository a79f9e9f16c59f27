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

#ifndef DEID_TUNING_H_
#define DEID_TUNING_H_

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "deid/linkage.h"
#include "deid/transforms.h"

namespace deid {

// Risk of each grid value of one technique applied alone, and the value
// with the fewest matched records (earliest grid position on ties).
struct ParamSelection {
  Technique technique = Technique::kSuppression;
  std::vector<double> grid;
  std::vector<RiskReport> risks;  // parallel to grid
  double chosen = 0;

  nlohmann::json to_json(const std::string& dataset) const;
};

ParamSelection select_best_param(const Dataset& ds, Technique technique,
                                 const std::vector<double>& grid,
                                 const SimilarityConfig& cfg, std::uint64_t seed,
                                 const TransformOptions& options = {},
                                 Warnings* warnings = nullptr);

}  // namespace deid

#endif  // DEID_TUNING_H_
