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

// Columnar data model for de-identification experiments.
//
// A Dataset is an immutable table of typed columns with one binary target
// column and a set of quasi-identifier (QI) columns. Every operation in this
// library takes Datasets by const reference and returns new values, so a
// Dataset may be shared freely between worker threads.
//
// Missing cells are explicit: NaN for numeric columns and std::nullopt for
// nominal ones. A missing cell never equals anything, including another
// missing cell.

#ifndef DEID_TABULAR_H_
#define DEID_TABULAR_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/base.h"

namespace deid {

enum class ColumnKind { kNominal, kInteger, kFloat };

std::string_view to_string(ColumnKind kind);

constexpr bool is_numeric(ColumnKind kind) {
  return kind != ColumnKind::kNominal;
}

class Column {
 public:
  static Column nominal(std::string name,
                        std::vector<std::optional<std::string>> values);

  // NaN marks a missing cell. Integer columns must hold integral values.
  static Column numeric(std::string name, ColumnKind kind,
                        std::vector<double> values);

  const std::string& name() const { return name_; }
  ColumnKind kind() const { return kind_; }
  std::size_t size() const;

  bool missing(std::size_t row) const;

  // Numeric columns only.
  double number(std::size_t row) const { return numbers_[row]; }
  std::span<const double> numbers() const { return numbers_; }

  // Nominal columns only.
  const std::optional<std::string>& text(std::size_t row) const {
    return texts_[row];
  }
  std::span<const std::optional<std::string>> texts() const { return texts_; }

  // Number of distinct non-missing values.
  std::size_t distinct_count() const;

  // CSV token for a cell; empty for missing. Float cells always carry a
  // decimal point or exponent so the kind survives a round trip.
  std::string format_cell(std::size_t row) const;

  // Same name, same kind, new numeric payload.
  Column with_numbers(std::vector<double> values) const;

  bool operator==(const Column& other) const;

 private:
  Column(std::string name, ColumnKind kind) : name_(std::move(name)), kind_(kind) {}

  std::string name_;
  ColumnKind kind_;
  std::vector<double> numbers_;
  std::vector<std::optional<std::string>> texts_;
};

class Dataset {
 public:
  // Validates: unique column names, equal lengths, target present and binary
  // (exactly two distinct labels, none missing), qi a subset of the
  // non-target columns. An absent qi means every non-target column.
  Dataset(std::string name, std::vector<Column> columns, std::string target,
          std::optional<std::vector<std::string>> qi = std::nullopt);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t n_rows() const { return n_rows_; }
  const std::string& target() const { return target_; }
  const std::vector<std::string>& qi() const { return qi_; }

  const Column* find(std::string_view column_name) const;
  const Column& column(std::string_view column_name) const;
  const Column& target_column() const { return column(target_); }
  bool is_qi(std::string_view column_name) const;

  // Every column except the target, in table order.
  std::vector<std::string> predictors() const;

  // The two target labels in ascending order.
  std::vector<std::string> target_labels() const;
  std::string target_label(std::size_t row) const;
  // The less frequent label; ties go to the lexicographically larger one.
  std::string minority_label() const;

  // Replaces the column set; qi is intersected with the surviving columns.
  Dataset with_columns(std::vector<Column> columns) const;
  Dataset with_name(std::string name) const;

  bool operator==(const Dataset& other) const;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
  std::string target_;
  std::vector<std::string> qi_;
};

// --- CSV -------------------------------------------------------------------

// True for the tokens treated as a missing cell: "", "NA" and "?".
bool is_missing_token(std::string_view token);

// Integer if every non-missing cell parses as an integer; float if every
// cell parses as a number and at least one is written with a fraction or
// exponent; nominal otherwise (including all-missing columns).
std::vector<ColumnKind> infer_column_kinds(
    std::span<const std::vector<std::string>> raw_columns);

// RFC-4180 reader. Throws Error for a missing file, a ragged row, an unknown
// or non-binary target.
Dataset load_csv(const std::filesystem::path& path, std::string_view target_name,
                 std::optional<std::vector<std::string>> qi = std::nullopt);

Dataset parse_csv(std::string_view text, std::string name,
                  std::string_view target_name,
                  std::optional<std::vector<std::string>> qi = std::nullopt);

std::string to_csv(const Dataset& ds);

// Writes through a temporary file and renames it into place.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

// --- Identifiers and equivalence classes -----------------------------------

// Drops non-target nominal and integer columns with one distinct value per
// row. If nothing would remain among the QI, the dataset is returned as is
// and a warning is recorded.
Dataset drop_direct_identifiers(const Dataset& ds, Warnings* warnings = nullptr);

struct EquivalenceClassIndex {
  // Classes ordered by their first row; rows ascending within a class.
  std::vector<std::vector<std::size_t>> classes;
  // class_of[row] indexes `classes`.
  std::vector<std::size_t> class_of;

  std::vector<std::size_t> sizes() const;
};

// Groups rows with equal values on `over`. A row with a missing cell in
// `over` is alone in its class. An empty `over` gives one class.
EquivalenceClassIndex equivalence_classes(const Dataset& ds,
                                          std::span<const std::string> over);

}  // namespace deid

#endif  // DEID_TABULAR_H_
