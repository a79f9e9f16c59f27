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

#ifndef DEID_BASE_H_
#define DEID_BASE_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

// Raised for invalid input data, violated preconditions and malformed files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal conditions collected while a stage runs. Functions accept a
// nullable pointer; passing nullptr discards warnings.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

// Stable (platform independent) 64-bit hash of a string, FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sub-seed for an independent random stream identified by `tag`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return splitmix64(seed ^ splitmix64(fnv1a(tag)));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits, so the stream is
// identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Quantile of sorted data by linear interpolation between order statistics
// (h = (n - 1) p).
double quantile_sorted(std::span<const double> sorted, double p);

// Copies, drops NaN, sorts and returns the quantile. NaN if nothing is left.
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);

// Standard deviation ignoring NaN. `ddof` = 1 gives the sample estimate.
double stddev(std::span<const double> values, int ddof);

// Runs fn(i) for i in [0, n) on the current TBB arena. Callers must make
// fn(i) write only to slot i so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn);

}  // namespace deid

#include "deid/internal/parallel_inl.h"

#endif  // DEID_BASE_H_
