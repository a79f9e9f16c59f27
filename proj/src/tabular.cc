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

#include "deid/tabular.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

namespace deid {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kNominal:
      return "nominal";
    case ColumnKind::kInteger:
      return "integer";
    case ColumnKind::kFloat:
      return "float";
  }
  return "unknown";
}

// --- Column ------------------------------------------------------------------

Column Column::nominal(std::string name,
                       std::vector<std::optional<std::string>> values) {
  Column c(std::move(name), ColumnKind::kNominal);
  c.texts_ = std::move(values);
  return c;
}

Column Column::numeric(std::string name, ColumnKind kind,
                       std::vector<double> values) {
  if (!is_numeric(kind)) {
    throw Error(fmt::format("column '{}': numeric payload for a nominal column", name));
  }
  if (kind == ColumnKind::kInteger) {
    for (double v : values) {
      if (!std::isnan(v) && v != std::trunc(v)) {
        throw Error(fmt::format("column '{}': non-integral value {} in integer column",
                                name, v));
      }
    }
  }
  Column c(std::move(name), kind);
  c.numbers_ = std::move(values);
  return c;
}

std::size_t Column::size() const {
  return kind_ == ColumnKind::kNominal ? texts_.size() : numbers_.size();
}

bool Column::missing(std::size_t row) const {
  return kind_ == ColumnKind::kNominal ? !texts_[row].has_value()
                                       : std::isnan(numbers_[row]);
}

std::size_t Column::distinct_count() const {
  if (kind_ == ColumnKind::kNominal) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : texts_) {
      if (t) seen.insert(*t);
    }
    return seen.size();
  }
  std::unordered_set<double> seen;
  for (double v : numbers_) {
    if (!std::isnan(v)) seen.insert(v == 0.0 ? 0.0 : v);
  }
  return seen.size();
}

std::string Column::format_cell(std::size_t row) const {
  if (missing(row)) return {};
  switch (kind_) {
    case ColumnKind::kNominal:
      return *texts_[row];
    case ColumnKind::kInteger:
      return fmt::format("{:.0f}", numbers_[row]);
    case ColumnKind::kFloat: {
      std::string s = fmt::format("{}", numbers_[row]);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
  }
  return {};
}

Column Column::with_numbers(std::vector<double> values) const {
  return numeric(name_, kind_, std::move(values));
}

bool Column::operator==(const Column& other) const {
  if (name_ != other.name_ || kind_ != other.kind_) return false;
  if (kind_ == ColumnKind::kNominal) return texts_ == other.texts_;
  if (numbers_.size() != other.numbers_.size()) return false;
  for (std::size_t i = 0; i < numbers_.size(); ++i) {
    const double a = numbers_[i];
    const double b = other.numbers_[i];
    if (std::isnan(a) != std::isnan(b)) return false;
    if (!std::isnan(a) && a != b) return false;
  }
  return true;
}

// --- Dataset -----------------------------------------------------------------

Dataset::Dataset(std::string name, std::vector<Column> columns, std::string target,
                 std::optional<std::vector<std::string>> qi)
    : name_(std::move(name)), columns_(std::move(columns)), target_(std::move(target)) {
  std::set<std::string_view> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name()).second) {
      throw Error(fmt::format("dataset '{}': duplicate column '{}'", name_, c.name()));
    }
  }
  const Column* t = find(target_);
  if (t == nullptr) {
    throw Error(fmt::format("dataset '{}': target '{}' not found", name_, target_));
  }
  n_rows_ = t->size();
  for (const auto& c : columns_) {
    if (c.size() != n_rows_) {
      throw Error(fmt::format("dataset '{}': column '{}' has {} values, expected {}",
                              name_, c.name(), c.size(), n_rows_));
    }
  }
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (t->missing(r)) {
      throw Error(fmt::format("dataset '{}': missing target label in row {}", name_, r));
    }
  }
  if (t->distinct_count() != 2) {
    throw Error(fmt::format("dataset '{}': target not binary ('{}' has {} labels)",
                            name_, target_, t->distinct_count()));
  }
  if (qi) {
    for (const auto& q : *qi) {
      if (q == target_) {
        throw Error(fmt::format("dataset '{}': target '{}' cannot be a QI", name_, q));
      }
      if (find(q) == nullptr) {
        throw Error(fmt::format("dataset '{}': QI column '{}' not found", name_, q));
      }
    }
    // Keep table order and drop duplicates.
    for (const auto& c : columns_) {
      if (std::find(qi->begin(), qi->end(), c.name()) != qi->end()) {
        qi_.push_back(c.name());
      }
    }
  } else {
    qi_ = predictors();
  }
}

const Column* Dataset::find(std::string_view column_name) const {
  for (const auto& c : columns_) {
    if (c.name() == column_name) return &c;
  }
  return nullptr;
}

const Column& Dataset::column(std::string_view column_name) const {
  const Column* c = find(column_name);
  if (c == nullptr) {
    throw Error(fmt::format("dataset '{}': no column '{}'", name_, column_name));
  }
  return *c;
}

bool Dataset::is_qi(std::string_view column_name) const {
  return std::find(qi_.begin(), qi_.end(), column_name) != qi_.end();
}

std::vector<std::string> Dataset::predictors() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.name() != target_) out.push_back(c.name());
  }
  return out;
}

std::string Dataset::target_label(std::size_t row) const {
  return target_column().format_cell(row);
}

std::vector<std::string> Dataset::target_labels() const {
  std::set<std::string> labels;
  for (std::size_t r = 0; r < n_rows_; ++r) labels.insert(target_label(r));
  return {labels.begin(), labels.end()};
}

std::string Dataset::minority_label() const {
  const auto labels = target_labels();
  std::size_t first = 0;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    if (target_label(r) == labels[0]) ++first;
  }
  return first < n_rows_ - first ? labels[0] : labels[1];
}

Dataset Dataset::with_columns(std::vector<Column> columns) const {
  std::vector<std::string> qi;
  for (const auto& q : qi_) {
    if (std::any_of(columns.begin(), columns.end(),
                    [&](const Column& c) { return c.name() == q; })) {
      qi.push_back(q);
    }
  }
  return Dataset(name_, std::move(columns), target_, std::move(qi));
}

Dataset Dataset::with_name(std::string name) const {
  Dataset copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

bool Dataset::operator==(const Dataset& other) const {
  return name_ == other.name_ && target_ == other.target_ && qi_ == other.qi_ &&
         columns_ == other.columns_;
}

// --- Identifiers and equivalence classes -----------------------------------

Dataset drop_direct_identifiers(const Dataset& ds, Warnings* warnings) {
  std::vector<Column> kept;
  std::vector<std::string> dropped;
  for (const auto& c : ds.columns()) {
    const bool identifier = c.name() != ds.target() &&
                            c.kind() != ColumnKind::kFloat &&
                            c.distinct_count() == ds.n_rows();
    if (identifier) {
      dropped.push_back(c.name());
    } else {
      kept.push_back(c);
    }
  }
  if (dropped.empty()) return ds;
  const bool qi_left = std::any_of(kept.begin(), kept.end(), [&](const Column& c) {
    return ds.is_qi(c.name());
  });
  if (!qi_left) {
    warn(warnings, fmt::format("dataset '{}': every QI column looks like a direct "
                               "identifier; nothing dropped",
                               ds.name()));
    return ds;
  }
  return ds.with_columns(std::move(kept));
}

std::vector<std::size_t> EquivalenceClassIndex::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.size());
  return out;
}

EquivalenceClassIndex equivalence_classes(const Dataset& ds,
                                          std::span<const std::string> over) {
  std::vector<const Column*> cols;
  for (const auto& name : over) cols.push_back(&ds.column(name));

  EquivalenceClassIndex index;
  index.class_of.resize(ds.n_rows());
  std::unordered_map<std::string, std::size_t> ids;
  std::string key;
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    bool has_missing = false;
    key.clear();
    for (const Column* c : cols) {
      if (c->missing(r)) {
        has_missing = true;
        break;
      }
      if (c->kind() == ColumnKind::kNominal) {
        const std::string& t = *c->text(r);
        const auto len = static_cast<std::uint32_t>(t.size());
        key.append(reinterpret_cast<const char*>(&len), sizeof(len));
        key.append(t);
      } else {
        const double v = c->number(r) == 0.0 ? 0.0 : c->number(r);
        const auto bits = std::bit_cast<std::uint64_t>(v);
        key.append(reinterpret_cast<const char*>(&bits), sizeof(bits));
      }
    }
    std::size_t id;
    if (has_missing) {
      id = index.classes.size();
      index.classes.emplace_back();
    } else {
      auto [it, inserted] = ids.try_emplace(key, index.classes.size());
      if (inserted) index.classes.emplace_back();
      id = it->second;
    }
    index.classes[id].push_back(r);
    index.class_of[r] = id;
  }
  return index;
}

}  // namespace deid
