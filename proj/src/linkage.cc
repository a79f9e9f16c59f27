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

#include "deid/linkage.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>
#include <variant>

#include <fmt/format.h>

namespace deid {
namespace {

// One shared QI column with both sides encoded for fast comparison.
struct Field {
  std::string name;
  bool nominal = false;
  std::vector<std::int32_t> orig_codes;  // -1 = missing
  std::vector<std::int32_t> var_codes;
  std::vector<double> orig_num;
  std::vector<double> var_num;
  double inv_scale = 1.0;
  std::size_t orig_cardinality = 0;

  double similarity(std::size_t a, std::size_t b) const {
    if (nominal) {
      const auto x = orig_codes[a];
      return x >= 0 && x == var_codes[b] ? 1.0 : 0.0;
    }
    const double d = orig_num[a] - var_num[b];
    if (std::isnan(d)) return 0.0;
    return std::exp(-std::abs(d) * inv_scale);
  }

  bool equal(std::size_t a, std::size_t b) const {
    if (nominal) return orig_codes[a] >= 0 && orig_codes[a] == var_codes[b];
    return orig_num[a] == var_num[b];
  }
};

std::vector<std::optional<std::string>> as_text(const Column& c) {
  if (c.kind() == ColumnKind::kNominal) return {c.texts().begin(), c.texts().end()};
  std::vector<std::optional<std::string>> out;
  out.reserve(c.size());
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.missing(r)) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(c.format_cell(r));
    }
  }
  return out;
}

Field make_field(const Column& orig, const Column& var, const SimilarityConfig& cfg) {
  Field f;
  f.name = orig.name();
  f.orig_cardinality = orig.distinct_count();
  f.nominal = !is_numeric(orig.kind()) || !is_numeric(var.kind());
  if (f.nominal) {
    std::unordered_map<std::string, std::int32_t> dict;
    auto encode = [&dict](const std::vector<std::optional<std::string>>& values) {
      std::vector<std::int32_t> codes;
      codes.reserve(values.size());
      for (const auto& v : values) {
        if (!v) {
          codes.push_back(-1);
          continue;
        }
        auto [it, _] = dict.try_emplace(*v, static_cast<std::int32_t>(dict.size()));
        codes.push_back(it->second);
      }
      return codes;
    };
    f.orig_codes = encode(as_text(orig));
    f.var_codes = encode(as_text(var));
    return f;
  }
  f.orig_num.assign(orig.numbers().begin(), orig.numbers().end());
  f.var_num.assign(var.numbers().begin(), var.numbers().end());
  double scale = 0;
  if (auto it = cfg.numeric_scale.find(orig.name()); it != cfg.numeric_scale.end()) {
    scale = it->second;
    if (!(scale > 0)) {
      throw Error(fmt::format("numeric scale for '{}' must be positive", orig.name()));
    }
  } else {
    scale = stddev(orig.numbers(), 1);
    if (!(scale > 0)) scale = 1.0;
  }
  f.inv_scale = 1.0 / scale;
  return f;
}

std::vector<Field> make_fields(const Dataset& original, const Dataset& variant,
                               const SimilarityConfig& cfg) {
  std::vector<Field> fields;
  for (const auto& name : shared_qi_columns(original, variant)) {
    fields.push_back(make_field(original.column(name), variant.column(name), cfg));
  }
  return fields;
}

// Candidate originals for each variant row.
class CandidateIndex {
 public:
  virtual ~CandidateIndex() = default;
  virtual void for_each(std::size_t variant_row,
                        const std::function<void(std::size_t)>& fn) const = 0;
};

class FullIndex final : public CandidateIndex {
 public:
  explicit FullIndex(std::size_t n_orig) : n_orig_(n_orig) {}
  void for_each(std::size_t, const std::function<void(std::size_t)>& fn) const override {
    for (std::size_t a = 0; a < n_orig_; ++a) fn(a);
  }

 private:
  std::size_t n_orig_;
};

// Originals grouped by a key; a variant row sees the groups whose key rank
// lies within +/- half_window of its own key rank. half_window = 0 is
// exact-key blocking.
class RankIndex final : public CandidateIndex {
 public:
  RankIndex(const Field& key, std::size_t n_orig, std::size_t n_var, std::size_t half_window)
      : half_window_(half_window) {
    using Key = std::variant<double, std::int32_t>;
    auto key_of = [&key](bool orig, std::size_t row) -> std::optional<Key> {
      if (key.nominal) {
        const auto code = orig ? key.orig_codes[row] : key.var_codes[row];
        if (code < 0) return std::nullopt;
        return Key(code);
      }
      const double v = orig ? key.orig_num[row] : key.var_num[row];
      if (std::isnan(v)) return std::nullopt;
      return Key(v == 0.0 ? 0.0 : v);
    };
    std::vector<Key> keys;
    for (std::size_t a = 0; a < n_orig; ++a) {
      if (auto k = key_of(true, a)) keys.push_back(*k);
    }
    for (std::size_t b = 0; b < n_var; ++b) {
      if (auto k = key_of(false, b)) keys.push_back(*k);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    auto rank_of = [&keys](const Key& k) {
      return static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), k) -
                                      keys.begin());
    };
    by_rank_.resize(keys.size());
    for (std::size_t a = 0; a < n_orig; ++a) {
      if (auto k = key_of(true, a)) by_rank_[rank_of(*k)].push_back(a);
    }
    var_rank_.assign(n_var, kNoRank);
    for (std::size_t b = 0; b < n_var; ++b) {
      if (auto k = key_of(false, b)) var_rank_[b] = rank_of(*k);
    }
  }

  void for_each(std::size_t variant_row,
                const std::function<void(std::size_t)>& fn) const override {
    const std::size_t r = var_rank_[variant_row];
    if (r == kNoRank) return;
    const std::size_t lo = r >= half_window_ ? r - half_window_ : 0;
    const std::size_t hi = std::min(by_rank_.size() - 1, r + half_window_);
    for (std::size_t k = lo; k <= hi; ++k) {
      for (std::size_t a : by_rank_[k]) fn(a);
    }
  }

 private:
  static constexpr std::size_t kNoRank = static_cast<std::size_t>(-1);
  std::size_t half_window_;
  std::vector<std::vector<std::size_t>> by_rank_;
  std::vector<std::size_t> var_rank_;
};

Blocking resolve(const Blocking& blocking, const Dataset& original, const Dataset& variant,
                 const std::vector<Field>& fields) {
  Blocking b = blocking;
  if (b.kind == Blocking::Kind::kAuto) {
    if (std::max(original.n_rows(), variant.n_rows()) <= b.auto_threshold) {
      return Blocking::none();
    }
    b.kind = Blocking::Kind::kSortedNeighborhood;
    b.column.clear();
  }
  if (b.kind == Blocking::Kind::kSortedNeighborhood && b.column.empty()) {
    const Field* best = nullptr;
    for (const auto& f : fields) {
      if (f.nominal) continue;
      if (best == nullptr || f.orig_cardinality > best->orig_cardinality) best = &f;
    }
    if (best == nullptr) {
      for (const auto& f : fields) {
        if (best == nullptr || f.orig_cardinality > best->orig_cardinality) best = &f;
      }
    }
    if (best != nullptr) b.column = best->name;
  }
  return b;
}

std::unique_ptr<CandidateIndex> make_index(const Blocking& b, const std::vector<Field>& fields,
                                           std::size_t n_orig, std::size_t n_var) {
  if (b.kind == Blocking::Kind::kNone) return std::make_unique<FullIndex>(n_orig);
  auto it = std::find_if(fields.begin(), fields.end(),
                         [&](const Field& f) { return f.name == b.column; });
  if (it == fields.end()) {
    throw Error(fmt::format("blocking column '{}' is not a shared QI column", b.column));
  }
  const std::size_t half = b.kind == Blocking::Kind::kBlockOn ? 0 : b.window / 2;
  return std::make_unique<RankIndex>(*it, n_orig, n_var, half);
}

}  // namespace

std::string Blocking::describe() const {
  switch (kind) {
    case Kind::kAuto:
      return fmt::format("auto({})", auto_threshold);
    case Kind::kNone:
      return "none";
    case Kind::kSortedNeighborhood:
      return fmt::format("sorted_neighborhood({},{})", column, window);
    case Kind::kBlockOn:
      return fmt::format("block_on({})", column);
  }
  return "unknown";
}

Blocking parse_blocking(const std::string& text, std::size_t window, std::string column) {
  if (text == "auto") {
    Blocking b;
    b.window = window;
    return b;
  }
  if (text == "none") return Blocking::none();
  if (text == "sorted_neighborhood") return Blocking::sorted_neighborhood(window, column);
  if (text == "block_on") {
    if (column.empty()) throw Error("block_on blocking needs a column");
    return Blocking::block_on(column);
  }
  throw Error(fmt::format("unknown blocking '{}'", text));
}

double attribute_similarity(const std::optional<std::string>& original,
                            const std::optional<std::string>& variant) {
  return original && variant && *original == *variant ? 1.0 : 0.0;
}

double attribute_similarity(double original, double variant, double scale) {
  if (std::isnan(original) || std::isnan(variant)) return 0.0;
  return std::exp(-std::abs(original - variant) / scale);
}

std::vector<std::string> shared_qi_columns(const Dataset& original, const Dataset& variant) {
  std::vector<std::string> out;
  for (const auto& q : original.qi()) {
    if (variant.find(q) != nullptr) out.push_back(q);
  }
  return out;
}

CandidatePairs candidate_pairs(const Dataset& original, const Dataset& variant,
                               const SimilarityConfig& cfg, Warnings* warnings) {
  const auto fields = make_fields(original, variant, cfg);
  CandidatePairs out;
  if (fields.empty()) {
    warn(warnings, fmt::format("'{}' shares no QI column with '{}'", variant.name(),
                               original.name()));
    return out;
  }
  const auto blocking = resolve(cfg.blocking, original, variant, fields);
  const auto index = make_index(blocking, fields, original.n_rows(), variant.n_rows());
  for (std::size_t b = 0; b < variant.n_rows(); ++b) {
    index->for_each(b, [&](std::size_t a) { out.pairs.emplace_back(a, b); });
  }
  return out;
}

RiskReport assess_risk(const Dataset& original, const Dataset& variant,
                       const SimilarityConfig& cfg, std::string variant_label,
                       Warnings* warnings) {
  if (!(cfg.match_fraction > 0 && cfg.match_fraction <= 1)) {
    throw Error(fmt::format("match_fraction must lie in (0, 1], got {}", cfg.match_fraction));
  }
  RiskReport report;
  report.variant = variant_label.empty() ? variant.name() : std::move(variant_label);
  report.n_rows = variant.n_rows();
  report.threshold = cfg.match_fraction;
  report.best_scores.assign(variant.n_rows(), 0.0);

  const auto fields = make_fields(original, variant, cfg);
  report.shared_qi = fields.size();
  if (fields.empty()) {
    warn(warnings, fmt::format("'{}' shares no QI column with '{}'; risk is 0",
                               report.variant, original.name()));
    report.blocking = "none";
    return report;
  }
  const auto blocking = resolve(cfg.blocking, original, variant, fields);
  report.blocking = blocking.describe();
  const auto index = make_index(blocking, fields, original.n_rows(), variant.n_rows());

  constexpr std::size_t kChunk = 64;
  const std::size_t n_var = variant.n_rows();
  parallel_for((n_var + kChunk - 1) / kChunk, [&](std::size_t chunk) {
    const std::size_t end = std::min(n_var, (chunk + 1) * kChunk);
    for (std::size_t b = chunk * kChunk; b < end; ++b) {
      double best = 0.0;
      index->for_each(b, [&](std::size_t a) {
        double score = 0.0;
        for (const auto& f : fields) score += f.similarity(a, b);
        best = std::max(best, score);
      });
      report.best_scores[b] = best;
    }
  });

  const double needed = cfg.match_fraction * static_cast<double>(fields.size());
  for (std::size_t b = 0; b < n_var; ++b) {
    if (report.best_scores[b] >= needed) report.matched.push_back(b);
  }
  report.matched_count = report.matched.size();
  report.risk = n_var == 0 ? 0.0
                           : static_cast<double>(report.matched_count) /
                                 static_cast<double>(n_var);
  return report;
}

nlohmann::json RiskReport::to_json() const {
  nlohmann::json j = {{"variant", variant},   {"matched_count", matched_count},
                      {"n_rows", n_rows},     {"risk", risk},
                      {"threshold", threshold}, {"shared_qi", shared_qi},
                      {"blocking", blocking}};
  if (scores_path) j["scores_path"] = *scores_path;
  return j;
}

RiskReport RiskReport::from_json(const nlohmann::json& j) {
  RiskReport r;
  r.variant = j.at("variant").get<std::string>();
  r.matched_count = j.at("matched_count").get<std::size_t>();
  r.n_rows = j.at("n_rows").get<std::size_t>();
  r.risk = j.at("risk").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.shared_qi = j.value("shared_qi", std::size_t{0});
  r.blocking = j.value("blocking", std::string{});
  if (j.contains("scores_path")) r.scores_path = j.at("scores_path").get<std::string>();
  return r;
}

std::string scores_csv(const RiskReport& report) {
  std::string out = "variant_row,best_score,matched\n";
  std::size_t next = 0;
  for (std::size_t b = 0; b < report.best_scores.size(); ++b) {
    const bool hit = next < report.matched.size() && report.matched[next] == b;
    if (hit) ++next;
    out += fmt::format("{},{},{}\n", b, report.best_scores[b], hit ? 1 : 0);
  }
  return out;
}

}  // namespace deid
