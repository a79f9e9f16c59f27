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

#include "deid/synthetic.h"

#include <cmath>
#include <numbers>
#include <optional>

#include <fmt/format.h>

namespace deid {
namespace {

// Box-Muller on the portable uniform; std::normal_distribution differs
// across standard libraries.
double normal(Rng& rng) {
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

double round_to(double x, int decimals) {
  if (decimals < 0) return x;
  const double p = std::pow(10.0, decimals);
  return std::round(x * p) / p;
}

}  // namespace

Dataset make_synthetic(std::string name, const SyntheticSpec& spec) {
  if (spec.rows < 2) throw Error("synthetic data needs at least two rows");
  Rng rng(spec.seed);
  const std::size_t n = spec.rows;

  // At least one row of each class.
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = uniform01(rng) < spec.positive_rate ? 1 : 0;
  y[0] = 1;
  y[1] = 0;

  std::vector<Column> columns;
  if (spec.id_column) {
    std::vector<double> ids(n);
    for (std::size_t r = 0; r < n; ++r) ids[r] = static_cast<double>(r + 1);
    columns.push_back(Column::numeric("id", ColumnKind::kInteger, std::move(ids)));
  }

  std::vector<std::vector<double>> numeric;
  for (std::size_t f = 0; f < spec.float_features + spec.integer_features; ++f) {
    const bool is_float = f < spec.float_features;
    const double center = is_float ? 50.0 : 40.0;
    const double sd = is_float ? 10.0 : 8.0;
    // Alternate the sign of the shift so no single direction carries the label.
    const double shift = (f % 2 == 0 ? 1.0 : -1.0) * spec.signal;
    std::vector<double> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      values[r] = center + sd * (normal(rng) + shift * y[r]);
    }
    numeric.push_back(std::move(values));
  }

  const std::size_t n_numeric = numeric.size();
  if (n_numeric > 0 && spec.outlier_rate > 0) {
    for (std::size_t r = 0; r < n; ++r) {
      if (uniform01(rng) >= spec.outlier_rate) continue;
      const auto f = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_numeric));
      const double sd = f < spec.float_features ? 10.0 : 8.0;
      numeric[f][r] += (uniform01(rng) < 0.5 ? -8.0 : 8.0) * sd;
    }
  }

  for (std::size_t f = 0; f < n_numeric; ++f) {
    const bool is_float = f < spec.float_features;
    auto& values = numeric[f];
    for (double& v : values) v = is_float ? round_to(v, spec.float_decimals) : std::round(v);
    const std::string col = is_float ? fmt::format("f{}", f)
                                     : fmt::format("i{}", f - spec.float_features);
    columns.push_back(Column::numeric(col, is_float ? ColumnKind::kFloat : ColumnKind::kInteger,
                                      std::move(values)));
  }

  static constexpr std::string_view kLevels[] = {"a", "b", "c", "d"};
  for (std::size_t f = 0; f < spec.nominal_features; ++f) {
    std::vector<std::optional<std::string>> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      // Positive rows lean towards the low levels.
      const double u = uniform01(rng);
      const double tilt = y[r] == 1 ? 0.6 : 0.2;
      std::size_t level = u < tilt ? static_cast<std::size_t>(uniform01(rng) * 2)
                                   : 2 + static_cast<std::size_t>(uniform01(rng) * 2);
      values[r] = std::string(kLevels[level]);
    }
    columns.push_back(Column::nominal(fmt::format("c{}", f), std::move(values)));
  }

  std::vector<std::optional<std::string>> labels(n);
  for (std::size_t r = 0; r < n; ++r) labels[r] = y[r] == 1 ? "yes" : "no";
  columns.push_back(Column::nominal("label", std::move(labels)));
  return Dataset(std::move(name), std::move(columns), "label");
}

Dataset make_separable(std::string name, std::size_t rows, std::uint64_t seed, double margin) {
  Rng rng(seed);
  std::vector<double> x0(rows), x1(rows);
  std::vector<std::optional<std::string>> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    // Alternate classes so both are well represented.
    const bool positive = r % 2 == 0;
    double a = 0, b = 0;
    do {
      a = 4.0 * uniform01(rng) - 2.0;
      b = 4.0 * uniform01(rng) - 2.0;
    } while (std::abs(a + b) < margin * std::sqrt(2.0) || (a + b > 0) != positive);
    x0[r] = a;
    x1[r] = b;
    labels[r] = positive ? "yes" : "no";
  }
  std::vector<Column> columns;
  columns.push_back(Column::numeric("x0", ColumnKind::kFloat, std::move(x0)));
  columns.push_back(Column::numeric("x1", ColumnKind::kFloat, std::move(x1)));
  columns.push_back(Column::nominal("label", std::move(labels)));
  return Dataset(std::move(name), std::move(columns), "label");
}

}  // namespace deid
