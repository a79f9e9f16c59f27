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

// Random single-column tables and the transform properties checked over
// them. Each check returns an empty string on success, else a description
// of the first counterexample.

#ifndef DEID_TESTS_TRANSFORM_PROPERTIES_H_
#define DEID_TESTS_TRANSFORM_PROPERTIES_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "deid/transforms.h"
#include "test_util.h"

namespace deid::testing {

struct RandomColumn {
  std::vector<double> values;
  bool integer = false;
};

// 5-204 values, spread over six orders of magnitude, with heavy tails and
// about 3% missing. values[0] is never missing.
inline RandomColumn random_column(Rng& rng) {
  RandomColumn c;
  c.integer = uniform01(rng) < 0.5;
  const std::size_t n = 5 + static_cast<std::size_t>(uniform01(rng) * 200);
  const double spread = std::pow(10.0, uniform01(rng) * 5 - 1);
  const double center = (uniform01(rng) - 0.5) * 1000;
  c.values.resize(n);
  for (double& v : c.values) {
    const double heavy = uniform01(rng) < 0.05 ? 30.0 : 1.0;
    v = center + (uniform01(rng) - 0.5) * spread * heavy;
    if (c.integer) v = std::round(v);
    if (uniform01(rng) < 0.03) v = std::numeric_limits<double>::quiet_NaN();
  }
  c.values[0] = c.integer ? std::round(center) : center;
  return c;
}

inline Dataset single_column(const RandomColumn& c) {
  return with_label({c.integer ? ints("x", c.values) : floats("x", c.values)});
}

inline std::vector<double> column_values(const Dataset& ds, const std::string& col = "x") {
  const auto v = ds.column(col).numbers();
  return {v.begin(), v.end()};
}

// Rounding twice equals rounding once, and every rounded value is a multiple
// of the base within 1e-9.
inline std::string check_rounding(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const Dataset ds = single_column(random_column(rng));
    for (double base : {0.2, 5.0, 10.0}) {
      const Dataset once = round_values(ds, base);
      if (!(round_values(once, base) == once)) {
        return fmt::format("trial {} base {}: not idempotent", trial, base);
      }
      if (ds.column("x").kind() == ColumnKind::kInteger && base == 0.2) continue;
      for (double v : column_values(once)) {
        if (!std::isnan(v) && std::abs(v - base * std::round(v / base)) > 1e-9) {
          return fmt::format("trial {} base {}: {} is not a multiple", trial, base, v);
        }
      }
    }
  }
  return {};
}

// Outputs lie within the Tukey fences; values already inside are bit-identical.
inline std::string check_top_bottom(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const RandomColumn c = random_column(rng);
    const Dataset ds = single_column(c);
    std::vector<double> sorted;
    for (double v : c.values) {
      if (!std::isnan(v)) sorted.push_back(v);
    }
    std::sort(sorted.begin(), sorted.end());
    for (double m : {1.5, 3.0}) {
      const auto f = compute_fences(quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.75), m);
      const auto out = column_values(top_bottom(ds, m));
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::isnan(c.values[i])) {
          if (!std::isnan(out[i])) return fmt::format("trial {}: missing cell filled", trial);
          continue;
        }
        if (out[i] < f.lower() || out[i] > f.upper()) {
          return fmt::format("trial {} m {}: {} outside [{}, {}]", trial, m, out[i], f.lower(),
                             f.upper());
        }
        const bool inside = c.values[i] >= f.lower() && c.values[i] <= f.upper();
        if (inside && std::bit_cast<std::uint64_t>(out[i]) != std::bit_cast<std::uint64_t>(c.values[i])) {
          return fmt::format("trial {} m {}: in-fence {} changed to {}", trial, m, c.values[i], out[i]);
        }
      }
    }
  }
  return {};
}

// Every recoded cell is an integer no larger than the input and less than
// one bin width away from it. Columns with a single distinct value are
// skipped; `checked` receives the number of columns examined.
inline std::string check_global_recode(std::uint64_t seed, int trials, int* checked = nullptr) {
  Rng rng(seed);
  int n = 0;
  for (int trial = 0; trial < trials; ++trial) {
    RandomColumn c = random_column(rng);
    c.integer = true;
    for (double& v : c.values) {
      if (!std::isnan(v)) v = std::round(v);
    }
    const Dataset ds = single_column(c);
    if (ds.column("x").distinct_count() < 2) continue;
    for (double mag : {0.5, 1.5}) {
      const double w = stddev(c.values, 1) * mag;
      const auto out = column_values(global_recode(ds, mag));
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::isnan(c.values[i])) continue;
        if (!(std::abs(out[i] - c.values[i]) < w) || out[i] > c.values[i] ||
            out[i] != std::round(out[i])) {
          return fmt::format("trial {} mag {}: {} -> {} (width {})", trial, mag, c.values[i],
                             out[i], w);
        }
      }
    }
    ++n;
  }
  if (checked != nullptr) *checked = n;
  return {};
}

}  // namespace deid::testing

#endif  // DEID_TESTS_TRANSFORM_PROPERTIES_H_
