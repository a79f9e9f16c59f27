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

// Privacy-preserving transforms over a Dataset.
//
// Five techniques, always composed in the fixed order
//   S  suppression of high-uniqueness attributes
//   T  top-and-bottom coding at Tukey fences
//   N  Laplace noise on float attributes, scaled per equivalence class
//   R  rounding of numeric attributes to a base
//   G  global re-coding of integer attributes into std-width bins
//
// The target column is never touched and rows are never removed.

#ifndef DEID_TRANSFORMS_H_
#define DEID_TRANSFORMS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deid/tabular.h"

namespace deid {

// Declaration order is the application order.
enum class Technique { kSuppression, kTopBottom, kNoise, kRounding, kGlobalRecode };

inline constexpr std::array<Technique, 5> kAllTechniques = {
    Technique::kSuppression, Technique::kTopBottom, Technique::kNoise,
    Technique::kRounding, Technique::kGlobalRecode};

char technique_letter(Technique t);
std::optional<Technique> technique_from_letter(char letter);
std::string_view technique_name(Technique t);

// Parameter grid per technique. Defaults are the grids used throughout the
// experiments; override them for quick sweeps.
struct ParameterGrids {
  std::vector<double> uniq_per = {0.7, 0.8, 0.9};
  std::vector<double> outlier = {1.5, 3};
  std::vector<double> ep = {0.5, 2, 4, 8, 16};
  std::vector<double> base = {0.2, 5, 10};
  std::vector<double> std_magnitude = {0.5, 1.5};

  const std::vector<double>& grid(Technique t) const;
  std::vector<double>& grid(Technique t);
};

// How the Laplace parameter is derived from diam / ep.
enum class NoiseMode {
  kScale,     // b = diam / ep (variance 2 b^2)
  kVariance,  // variance = diam / ep, so b = sqrt(diam / (2 ep))
};

struct TransformOptions {
  NoiseMode noise_mode = NoiseMode::kScale;
};

struct VariantSpec {
  std::vector<Technique> techniques;  // canonical order, non-empty
  std::map<Technique, double> params;
  std::uint64_t seed = 0;

  // e.g. "S0.7_T1.5_N8_R5_G1.5".
  std::string label() const;
  // Techniques only, e.g. "S_T_N_R_G"; groups variants across datasets whose
  // tuned parameters differ.
  std::string family() const;

  bool operator==(const VariantSpec&) const = default;
};

// Inverse of VariantSpec::label(); the seed is left at zero.
VariantSpec parse_variant_label(std::string_view label);

struct TukeyFences {
  double q1 = 0;
  double q3 = 0;
  double multiplier = 1.5;
  double iqr() const { return q3 - q1; }
  double lower() const { return q1 - multiplier * iqr(); }
  double upper() const { return q3 + multiplier * iqr(); }
};

TukeyFences compute_fences(double q1, double q3, double multiplier);

// Laplace scale b for a class of diameter `diam` at budget `ep`.
double laplace_scale(double diam, double ep, NoiseMode mode);

// One Laplace(0, b) draw by inverse CDF.
double sample_laplace(Rng& rng, double scale);

Dataset suppress(const Dataset& ds, double uniq_per, Warnings* warnings = nullptr);

Dataset top_bottom(const Dataset& ds, double multiplier, Warnings* warnings = nullptr);

// Float columns only. Each column draws from its own stream seeded from
// (seed, column name).
Dataset add_laplace_noise(const Dataset& ds, double ep, std::uint64_t seed,
                          const TransformOptions& options = {},
                          Warnings* warnings = nullptr);

// base * round(v / base), ties away from zero. Integer columns are skipped
// when the base is fractional so they stay integral.
Dataset round_values(const Dataset& ds, double base, Warnings* warnings = nullptr);

// Integer columns only: bins of width sample_std * std_magnitude anchored at
// the column minimum; each value becomes the smallest integer of its bin.
Dataset global_recode(const Dataset& ds, double std_magnitude,
                      Warnings* warnings = nullptr);

std::set<Technique> applicable_techniques(const Dataset& ds,
                                          const ParameterGrids& grids = {});

// All 2^k - 1 non-empty subsets of the applicable techniques, by size and
// then in canonical order.
std::vector<VariantSpec> enumerate_variants(const Dataset& ds,
                                            const std::map<Technique, double>& chosen,
                                            std::uint64_t seed = 0,
                                            const ParameterGrids& grids = {},
                                            Warnings* warnings = nullptr);

// Applies spec.techniques in canonical order. The noise stream is seeded
// from (spec.seed, spec.label()).
Dataset apply_variant(const Dataset& ds, const VariantSpec& spec,
                      const TransformOptions& options = {},
                      Warnings* warnings = nullptr);

}  // namespace deid

#endif  // DEID_TRANSFORMS_H_
