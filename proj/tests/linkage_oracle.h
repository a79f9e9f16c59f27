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

#ifndef DEID_TESTS_LINKAGE_ORACLE_H_
#define DEID_TESTS_LINKAGE_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <utility>
#include <vector>

namespace deid::testing {

// Brute-force sorted neighbourhood on a numeric key: rank the distinct keys
// of both tables together, then pair every original with every variant row
// whose key ranks differ by at most window / 2. Missing keys pair with
// nothing. Pairs come back sorted by (variant row, original row).
inline std::vector<std::pair<std::size_t, std::size_t>> sorted_neighborhood_oracle(
    const std::vector<double>& orig, const std::vector<double>& var, std::size_t window) {
  std::map<double, long> rank;
  for (double v : orig) {
    if (!std::isnan(v)) rank[v] = 0;
  }
  for (double v : var) {
    if (!std::isnan(v)) rank[v] = 0;
  }
  long next = 0;
  for (auto& [key, r] : rank) r = next++;
  const long half = static_cast<long>(window / 2);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < var.size(); ++b) {
    if (std::isnan(var[b])) continue;
    for (std::size_t a = 0; a < orig.size(); ++a) {
      if (std::isnan(orig[a])) continue;
      if (std::labs(rank.at(orig[a]) - rank.at(var[b])) <= half) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::pair(x.second, x.first) < std::pair(y.second, y.first);
  });
  return out;
}

}  // namespace deid::testing

#endif  // DEID_TESTS_LINKAGE_ORACLE_H_
