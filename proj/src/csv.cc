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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "deid/io.h"
#include "deid/tabular.h"

namespace deid {
namespace {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

std::vector<Record> split_records(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line is not a record.
    if (!(current.fields.size() == 1 && current.fields[0].empty())) {
      records.push_back(std::move(current));
    }
    current = Record{};
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        current.line = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(fmt::format("unterminated quoted field starting at line {}", current.line));
  }
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_integer(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return static_cast<double>(v);
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos ||
         (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void append_field(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

bool is_missing_token(std::string_view token) {
  token = trim(token);
  return token.empty() || token == "NA" || token == "?";
}

std::vector<ColumnKind> infer_column_kinds(
    std::span<const std::vector<std::string>> raw_columns) {
  std::vector<ColumnKind> kinds;
  kinds.reserve(raw_columns.size());
  for (const auto& col : raw_columns) {
    bool any = false;
    bool all_integer = true;
    bool all_number = true;
    for (const auto& cell : col) {
      if (is_missing_token(cell)) continue;
      any = true;
      if (all_integer && !parse_integer(cell)) all_integer = false;
      if (!all_integer && !parse_number(cell)) {
        all_number = false;
        break;
      }
    }
    if (!any || !all_number) {
      kinds.push_back(ColumnKind::kNominal);
    } else {
      kinds.push_back(all_integer ? ColumnKind::kInteger : ColumnKind::kFloat);
    }
  }
  return kinds;
}

Dataset parse_csv(std::string_view text, std::string name, std::string_view target_name,
                  std::optional<std::vector<std::string>> qi) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto records = split_records(text);
  if (records.empty()) throw Error(fmt::format("{}: missing header row", name));

  std::vector<std::string> header;
  for (auto& h : records.front().fields) header.emplace_back(trim(h));
  const std::size_t width = header.size();
  std::vector<std::vector<std::string>> raw(width);
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto& rec = records[i];
    if (rec.fields.size() != width) {
      throw Error(fmt::format("{}: ragged row at line {} ({} cells, expected {})", name,
                              rec.line, rec.fields.size(), width));
    }
    for (std::size_t c = 0; c < width; ++c) raw[c].push_back(std::move(rec.fields[c]));
  }
  if (std::find(header.begin(), header.end(), target_name) == header.end()) {
    throw Error(fmt::format("{}: target '{}' not found in header", name, target_name));
  }

  const auto kinds = infer_column_kinds(raw);
  std::vector<Column> columns;
  columns.reserve(width);
  for (std::size_t c = 0; c < width; ++c) {
    if (kinds[c] == ColumnKind::kNominal) {
      std::vector<std::optional<std::string>> values;
      values.reserve(raw[c].size());
      for (auto& cell : raw[c]) {
        if (is_missing_token(cell)) {
          values.emplace_back(std::nullopt);
        } else {
          values.emplace_back(std::string(trim(cell)));
        }
      }
      columns.push_back(Column::nominal(header[c], std::move(values)));
    } else {
      std::vector<double> values;
      values.reserve(raw[c].size());
      for (const auto& cell : raw[c]) {
        values.push_back(is_missing_token(cell) ? std::numeric_limits<double>::quiet_NaN()
                                                : *parse_number(cell));
      }
      columns.push_back(Column::numeric(header[c], kinds[c], std::move(values)));
    }
  }
  return Dataset(std::move(name), std::move(columns), std::string(target_name),
                 std::move(qi));
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_name,
                 std::optional<std::vector<std::string>> qi) {
  return parse_csv(read_file(path), path.stem().string(), target_name, std::move(qi));
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  const auto& cols = ds.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c > 0) out.push_back(',');
    append_field(out, cols[c].name());
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c > 0) out.push_back(',');
      append_field(out, cols[c].format_cell(r));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(ds));
}

}  // namespace deid
