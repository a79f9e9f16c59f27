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

#include "deid/tuning.h"

#include <fmt/format.h>

namespace deid {

ParamSelection select_best_param(const Dataset& ds, Technique technique,
                                 const std::vector<double>& grid,
                                 const SimilarityConfig& cfg, std::uint64_t seed,
                                 const TransformOptions& options, Warnings* warnings) {
  if (grid.empty()) {
    throw Error(fmt::format("empty parameter grid for {}", technique_name(technique)));
  }
  ParameterGrids probe;
  probe.grid(technique) = grid;
  if (!applicable_techniques(ds, probe).contains(technique)) {
    throw Error(fmt::format("{} is not applicable to '{}'", technique_name(technique),
                            ds.name()));
  }

  ParamSelection sel;
  sel.technique = technique;
  sel.grid = grid;
  sel.risks.resize(grid.size());
  std::vector<Warnings> local(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    VariantSpec spec;
    spec.techniques = {technique};
    spec.params[technique] = grid[i];
    spec.seed = seed;
    const Dataset variant = apply_variant(ds, spec, options, &local[i]);
    sel.risks[i] = assess_risk(ds, variant, cfg, spec.label(), &local[i]);
  });
  for (auto& w : local) {
    for (auto& m : w) warn(warnings, std::move(m));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (sel.risks[i].matched_count < sel.risks[best].matched_count) best = i;
  }
  sel.chosen = grid[best];
  return sel;
}

nlohmann::json ParamSelection::to_json(const std::string& dataset) const {
  nlohmann::json risks_json = nlohmann::json::array();
  for (const auto& r : risks) {
    risks_json.push_back({{"label", r.variant},
                          {"matched_count", r.matched_count},
                          {"risk", r.risk}});
  }
  return {{"dataset", dataset},
          {"technique", std::string(1, technique_letter(technique))},
          {"grid", grid},
          {"risks", risks_json},
          {"chosen", chosen}};
}

}  // namespace deid
