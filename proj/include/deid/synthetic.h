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

// Seeded synthetic binary-classification tables for demos and tests.

#ifndef DEID_SYNTHETIC_H_
#define DEID_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "deid/tabular.h"

namespace deid {

struct SyntheticSpec {
  std::size_t rows = 1000;
  std::size_t float_features = 3;    // f0, f1, ... around 50, sd 10
  std::size_t integer_features = 2;  // i0, i1, ... around 40, sd 8
  std::size_t nominal_features = 0;  // c0, c1, ... levels a..d
  // Class-conditional mean shift in standard deviations.
  double signal = 1.0;
  double positive_rate = 0.35;
  // Fraction of rows with one numeric cell pushed 8 sd out.
  double outlier_rate = 0.0;
  int float_decimals = -1;  // -1 keeps full precision
  bool id_column = false;   // unique integer "id"
  std::uint64_t seed = 0;
};

// Target column "label" with values "yes" (positive, minority) and "no".
Dataset make_synthetic(std::string name, const SyntheticSpec& spec);

// Two float features, label "yes" iff x0 + x1 > 0, with no point closer
// than `margin` to the boundary.
Dataset make_separable(std::string name, std::size_t rows, std::uint64_t seed,
                       double margin = 0.5);

}  // namespace deid

#endif  // DEID_SYNTHETIC_H_
