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

#include "deid/transforms.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

namespace deid {
namespace {

bool is_predictor(const Dataset& ds, const Column& c) { return c.name() != ds.target(); }

// Rebuilds the dataset replacing the payload of the columns `fn` handles.
// fn returns std::nullopt to leave a column as is.
template <typename Fn>
Dataset map_columns(const Dataset& ds, Fn&& fn) {
  std::vector<Column> out;
  out.reserve(ds.columns().size());
  for (const auto& c : ds.columns()) {
    if (!is_predictor(ds, c)) {
      out.push_back(c);
      continue;
    }
    std::optional<Column> replaced = fn(c);
    out.push_back(replaced ? std::move(*replaced) : c);
  }
  return ds.with_columns(std::move(out));
}

double distinct_fraction(const Dataset& ds, const Column& c) {
  if (ds.n_rows() == 0) return 0.0;
  return static_cast<double>(c.distinct_count()) / static_cast<double>(ds.n_rows());
}

struct Range {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  bool empty() const { return min > max; }
  double diameter() const { return empty() ? 0.0 : max - min; }
  void add(double v) {
    if (std::isnan(v)) return;
    min = std::min(min, v);
    max = std::max(max, v);
  }
};

}  // namespace

char technique_letter(Technique t) {
  switch (t) {
    case Technique::kSuppression:
      return 'S';
    case Technique::kTopBottom:
      return 'T';
    case Technique::kNoise:
      return 'N';
    case Technique::kRounding:
      return 'R';
    case Technique::kGlobalRecode:
      return 'G';
  }
  return '?';
}

std::optional<Technique> technique_from_letter(char letter) {
  for (Technique t : kAllTechniques) {
    if (technique_letter(t) == letter) return t;
  }
  return std::nullopt;
}

std::string_view technique_name(Technique t) {
  switch (t) {
    case Technique::kSuppression:
      return "suppression";
    case Technique::kTopBottom:
      return "top-and-bottom";
    case Technique::kNoise:
      return "noise";
    case Technique::kRounding:
      return "rounding";
    case Technique::kGlobalRecode:
      return "global-recoding";
  }
  return "unknown";
}

const std::vector<double>& ParameterGrids::grid(Technique t) const {
  switch (t) {
    case Technique::kSuppression:
      return uniq_per;
    case Technique::kTopBottom:
      return outlier;
    case Technique::kNoise:
      return ep;
    case Technique::kRounding:
      return base;
    case Technique::kGlobalRecode:
      return std_magnitude;
  }
  throw Error("unknown technique");
}

std::vector<double>& ParameterGrids::grid(Technique t) {
  return const_cast<std::vector<double>&>(std::as_const(*this).grid(t));
}

std::string VariantSpec::label() const {
  std::string out;
  for (Technique t : techniques) {
    if (!out.empty()) out.push_back('_');
    out.push_back(technique_letter(t));
    auto it = params.find(t);
    if (it != params.end()) out += fmt::format("{}", it->second);
  }
  return out;
}

std::string VariantSpec::family() const {
  std::string out;
  for (Technique t : techniques) {
    if (!out.empty()) out.push_back('_');
    out.push_back(technique_letter(t));
  }
  return out;
}

VariantSpec parse_variant_label(std::string_view label) {
  VariantSpec spec;
  if (!label.empty() && label.back() == '_') throw Error("trailing '_' in variant label");
  while (!label.empty()) {
    const auto cut = label.find('_');
    std::string_view part = label.substr(0, cut);
    label = cut == std::string_view::npos ? std::string_view{} : label.substr(cut + 1);
    if (part.empty()) throw Error("empty technique in variant label");
    auto t = technique_from_letter(part.front());
    if (!t) throw Error(fmt::format("unknown technique '{}' in variant label", part.front()));
    spec.techniques.push_back(*t);
    part.remove_prefix(1);
    if (!part.empty()) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc{} || ptr != part.data() + part.size()) {
        throw Error(fmt::format("bad parameter '{}' in variant label", part));
      }
      spec.params[*t] = v;
    }
  }
  if (spec.techniques.empty()) throw Error("empty variant label");
  return spec;
}

TukeyFences compute_fences(double q1, double q3, double multiplier) {
  if (q1 > q3) throw Error(fmt::format("fences need q1 <= q3, got {} > {}", q1, q3));
  return TukeyFences{q1, q3, multiplier};
}

double laplace_scale(double diam, double ep, NoiseMode mode) {
  if (!(ep > 0)) throw Error(fmt::format("privacy budget must be positive, got {}", ep));
  switch (mode) {
    case NoiseMode::kScale:
      return diam / ep;
    case NoiseMode::kVariance:
      return std::sqrt(diam / (2.0 * ep));
  }
  return diam / ep;
}

double sample_laplace(Rng& rng, double scale) {
  double u = 0;
  do {
    u = uniform01(rng);
  } while (u == 0.0);
  u -= 0.5;  // (-0.5, 0.5)
  const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -magnitude : magnitude;
}

// --- Suppression -------------------------------------------------------------

Dataset suppress(const Dataset& ds, double uniq_per, Warnings* warnings) {
  if (!(uniq_per > 0 && uniq_per < 1)) {
    throw Error(fmt::format("uniq_per must lie in (0, 1), got {}", uniq_per));
  }
  std::vector<Column> kept;
  std::size_t predictors_kept = 0;
  const Column* least_unique = nullptr;
  for (const auto& c : ds.columns()) {
    if (!is_predictor(ds, c)) {
      kept.push_back(c);
      continue;
    }
    const double frac = distinct_fraction(ds, c);
    if (least_unique == nullptr || frac < distinct_fraction(ds, *least_unique)) {
      least_unique = &c;
    }
    if (frac > uniq_per) continue;
    kept.push_back(c);
    ++predictors_kept;
  }
  if (predictors_kept == 0 && least_unique != nullptr) {
    warn(warnings, fmt::format("suppression at {} would remove every predictor of '{}'; "
                               "keeping '{}'",
                               uniq_per, ds.name(), least_unique->name()));
    std::vector<Column> out;
    for (const auto& c : ds.columns()) {
      if (!is_predictor(ds, c) || &c == least_unique) out.push_back(c);
    }
    return ds.with_columns(std::move(out));
  }
  return ds.with_columns(std::move(kept));
}

// --- Top-and-bottom coding ---------------------------------------------------

Dataset top_bottom(const Dataset& ds, double multiplier, Warnings* warnings) {
  if (!(multiplier > 0)) throw Error(fmt::format("outlier multiplier must be positive"));
  return map_columns(ds, [&](const Column& c) -> std::optional<Column> {
    if (!is_numeric(c.kind())) return std::nullopt;
    std::vector<double> sorted;
    for (double v : c.numbers()) {
      if (!std::isnan(v)) sorted.push_back(v);
    }
    if (sorted.empty()) {
      warn(warnings, fmt::format("top-and-bottom: column '{}' is all missing", c.name()));
      return std::nullopt;
    }
    std::sort(sorted.begin(), sorted.end());
    const auto fences = compute_fences(quantile_sorted(sorted, 0.25),
                                       quantile_sorted(sorted, 0.75), multiplier);
    const double lo = fences.lower();
    const double hi = fences.upper();
    // Whiskers: the most extreme observations still inside the fences.
    const auto first_in = std::lower_bound(sorted.begin(), sorted.end(), lo);
    const auto last_in = std::upper_bound(sorted.begin(), sorted.end(), hi);
    const double low_whisker = *first_in;
    const double high_whisker = *(last_in - 1);
    if (first_in == sorted.begin() && last_in == sorted.end()) return std::nullopt;

    std::vector<double> out(c.numbers().begin(), c.numbers().end());
    for (double& v : out) {
      if (std::isnan(v)) continue;
      if (v < lo) {
        v = low_whisker;
      } else if (v > hi) {
        v = high_whisker;
      }
    }
    return c.with_numbers(std::move(out));
  });
}

// --- Laplace noise -----------------------------------------------------------

Dataset add_laplace_noise(const Dataset& ds, double ep, std::uint64_t seed,
                          const TransformOptions& options, Warnings* warnings) {
  if (!(ep > 0)) throw Error(fmt::format("privacy budget must be positive, got {}", ep));
  return map_columns(ds, [&](const Column& c) -> std::optional<Column> {
    if (c.kind() != ColumnKind::kFloat) return std::nullopt;
    Range global;
    for (double v : c.numbers()) global.add(v);
    if (global.diameter() == 0.0) {
      warn(warnings, fmt::format("noise: column '{}' is constant; left unchanged", c.name()));
      return std::nullopt;
    }

    std::vector<std::string> others;
    for (const auto& q : ds.qi()) {
      if (q != c.name()) others.push_back(q);
    }
    const auto classes = equivalence_classes(ds, others);
    std::vector<double> scale(classes.classes.size());
    for (std::size_t k = 0; k < classes.classes.size(); ++k) {
      Range range;
      for (std::size_t row : classes.classes[k]) range.add(c.number(row));
      double diam = range.diameter();
      if (classes.classes[k].size() < 2 || diam == 0.0) diam = global.diameter();
      scale[k] = laplace_scale(diam, ep, options.noise_mode);
    }

    Rng rng(derive_seed(seed, c.name()));
    std::vector<double> out(c.numbers().begin(), c.numbers().end());
    for (std::size_t row = 0; row < out.size(); ++row) {
      if (std::isnan(out[row])) continue;
      out[row] += sample_laplace(rng, scale[classes.class_of[row]]);
    }
    return c.with_numbers(std::move(out));
  });
}

// --- Rounding ----------------------------------------------------------------

Dataset round_values(const Dataset& ds, double base, Warnings* warnings) {
  if (!(base > 0)) throw Error(fmt::format("rounding base must be positive, got {}", base));
  const bool integral_base = base == std::trunc(base);
  return map_columns(ds, [&](const Column& c) -> std::optional<Column> {
    if (!is_numeric(c.kind())) return std::nullopt;
    if (c.kind() == ColumnKind::kInteger && !integral_base) {
      warn(warnings, fmt::format("rounding: base {} skipped for integer column '{}'", base,
                                 c.name()));
      return std::nullopt;
    }
    std::vector<double> out(c.numbers().begin(), c.numbers().end());
    for (double& v : out) {
      if (!std::isnan(v)) v = base * std::round(v / base);
    }
    return c.with_numbers(std::move(out));
  });
}

// --- Global re-coding --------------------------------------------------------

Dataset global_recode(const Dataset& ds, double std_magnitude, Warnings* warnings) {
  if (!(std_magnitude > 0)) {
    throw Error(fmt::format("std_magnitude must be positive, got {}", std_magnitude));
  }
  return map_columns(ds, [&](const Column& c) -> std::optional<Column> {
    if (c.kind() != ColumnKind::kInteger) return std::nullopt;
    if (c.distinct_count() < 2) {
      warn(warnings, fmt::format("global re-coding: column '{}' has fewer than two "
                                 "distinct values",
                                 c.name()));
      return std::nullopt;
    }
    const double width = stddev(c.numbers(), 1) * std_magnitude;
    Range range;
    for (double v : c.numbers()) range.add(v);
    std::vector<double> out(c.numbers().begin(), c.numbers().end());
    for (double& v : out) {
      if (std::isnan(v)) continue;
      const double bin = std::floor((v - range.min) / width);
      const double lower = range.min + width * bin;
      // Smallest integer inside [lower, lower + width); never above v itself.
      v = std::min(v, std::ceil(lower - 1e-9));
    }
    return c.with_numbers(std::move(out));
  });
}

// --- Variants ----------------------------------------------------------------

std::set<Technique> applicable_techniques(const Dataset& ds, const ParameterGrids& grids) {
  std::set<Technique> out;
  const double min_uniq = grids.uniq_per.empty()
                              ? 1.0
                              : *std::min_element(grids.uniq_per.begin(), grids.uniq_per.end());
  for (const auto& c : ds.columns()) {
    if (!is_predictor(ds, c)) continue;
    if (distinct_fraction(ds, c) > min_uniq) out.insert(Technique::kSuppression);
    if (is_numeric(c.kind())) {
      out.insert(Technique::kTopBottom);
      out.insert(Technique::kRounding);
    }
    if (c.kind() == ColumnKind::kFloat) out.insert(Technique::kNoise);
    if (c.kind() == ColumnKind::kInteger) out.insert(Technique::kGlobalRecode);
  }
  for (Technique t : kAllTechniques) {
    if (grids.grid(t).empty()) out.erase(t);
  }
  return out;
}

std::vector<VariantSpec> enumerate_variants(const Dataset& ds,
                                            const std::map<Technique, double>& chosen,
                                            std::uint64_t seed, const ParameterGrids& grids,
                                            Warnings* warnings) {
  const auto applicable = applicable_techniques(ds, grids);
  const std::vector<Technique> techniques(applicable.begin(), applicable.end());
  if (techniques.empty()) {
    warn(warnings, fmt::format("dataset '{}': no applicable technique", ds.name()));
    return {};
  }
  for (Technique t : techniques) {
    if (!chosen.contains(t)) {
      throw Error(fmt::format("no parameter chosen for {}", technique_name(t)));
    }
  }
  const std::size_t k = techniques.size();
  std::vector<std::uint32_t> masks;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) masks.push_back(mask);
  // Smaller combinations first; within a size, canonical lexicographic order,
  // which is descending order of the bit-reversed mask.
  auto reversed = [k](std::uint32_t mask) {
    std::uint32_t r = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) r |= 1u << (k - 1 - i);
    }
    return r;
  };
  std::stable_sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
    const int pa = std::popcount(a);
    const int pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    return reversed(a) > reversed(b);
  });

  std::vector<VariantSpec> out;
  out.reserve(masks.size());
  for (std::uint32_t mask : masks) {
    VariantSpec spec;
    spec.seed = seed;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) {
        spec.techniques.push_back(techniques[i]);
        spec.params[techniques[i]] = chosen.at(techniques[i]);
      }
    }
    out.push_back(std::move(spec));
  }
  return out;
}

Dataset apply_variant(const Dataset& ds, const VariantSpec& spec,
                      const TransformOptions& options, Warnings* warnings) {
  if (spec.techniques.empty()) throw Error("variant without techniques");
  std::vector<Technique> order = spec.techniques;
  std::sort(order.begin(), order.end());
  const std::uint64_t noise_seed = derive_seed(spec.seed, spec.label());

  Dataset current = ds;
  for (Technique t : order) {
    auto it = spec.params.find(t);
    if (it == spec.params.end()) {
      warn(warnings, fmt::format("{}: no parameter for {}; skipped", spec.label(),
                                 technique_name(t)));
      continue;
    }
    const double p = it->second;
    try {
      switch (t) {
        case Technique::kSuppression:
          current = suppress(current, p, warnings);
          break;
        case Technique::kTopBottom:
          current = top_bottom(current, p, warnings);
          break;
        case Technique::kNoise:
          current = add_laplace_noise(current, p, noise_seed, options, warnings);
          break;
        case Technique::kRounding:
          current = round_values(current, p, warnings);
          break;
        case Technique::kGlobalRecode:
          current = global_recode(current, p, warnings);
          break;
      }
    } catch (const Error& e) {
      warn(warnings, fmt::format("{}: {} failed: {}", spec.label(), technique_name(t),
                                 e.what()));
    }
  }
  return current;
}

}  // namespace deid
