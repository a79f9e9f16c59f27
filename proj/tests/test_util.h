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

#ifndef DEID_TESTS_TEST_UTIL_H_
#define DEID_TESTS_TEST_UTIL_H_

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "deid/tabular.h"

namespace deid::testing {

inline Column ints(std::string name, std::vector<double> values) {
  return Column::numeric(std::move(name), ColumnKind::kInteger, std::move(values));
}

inline Column floats(std::string name, std::vector<double> values) {
  return Column::numeric(std::move(name), ColumnKind::kFloat, std::move(values));
}

inline Column nominal(std::string name, const std::vector<std::string>& values) {
  std::vector<std::optional<std::string>> v(values.begin(), values.end());
  return Column::nominal(std::move(name), std::move(v));
}

// "yes" on every third row, "no" elsewhere.
inline Column labels(std::size_t n, std::string name = "label") {
  std::vector<std::optional<std::string>> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 3 == 0 ? "yes" : "no";
  return Column::nominal(std::move(name), std::move(v));
}

// Appends a "label" target to `columns`.
inline Dataset with_label(std::vector<Column> columns, std::string name = "fixture") {
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  columns.push_back(labels(n));
  return Dataset(std::move(name), std::move(columns), "label");
}

inline std::vector<double> sequence(std::size_t n, double start = 0, double step = 1) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + step * static_cast<double>(i);
  return v;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("deid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

 private:
  std::filesystem::path path_;
};

}  // namespace deid::testing

#endif  // DEID_TESTS_TEST_UTIL_H_
