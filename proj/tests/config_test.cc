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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "deid/config.h"
#include "deid/io.h"
#include "test_util.h"

namespace deid {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using testing::TempDir;

constexpr const char* kFull = R"(
seed = 42
out = results
jobs = 2
force = yes
learners = external

[dataset.adult]
path = data/adult.csv
target = income
qi = age, sex , zip

[dataset.abs]
path = /data/abs.csv
target = y

[transform]
noise_mode = variance

[grids]
ep = 0.5, 4
base = 1

[linkage]
match_fraction = 0.8
blocking = sorted_neighborhood
window = 40
key = age
auto_threshold = 10
scale.age = 2.5
write_scores = true

[learning]
C = 0.5, 2
cv_folds = 3
fscore = macro
external_results = harness.jsonl
algorithms = bagging, boosting

[stats]
rope_lo = -2
rope_hi = 2
n_samples = 1000
prior = 0, 1, 1
scenarios = vs_lowest_risk
)";

TEST(ParseConfig, EveryKey) {
  const RunConfig c = parse_config(kFull, "/etc/deid");
  EXPECT_EQ(c.seed, 42U);
  EXPECT_EQ(c.out, "/etc/deid/results");
  EXPECT_EQ(c.jobs, 2U);
  EXPECT_TRUE(c.force);
  EXPECT_EQ(c.learners, LearnerMode::kExternal);

  ASSERT_EQ(c.datasets.size(), 2U);
  EXPECT_EQ(c.datasets[0].name, "adult");
  EXPECT_EQ(c.datasets[0].path, "/etc/deid/data/adult.csv");
  EXPECT_EQ(c.datasets[0].target, "income");
  EXPECT_THAT(*c.datasets[0].qi, ElementsAre("age", "sex", "zip"));
  EXPECT_EQ(c.datasets[1].path, "/data/abs.csv");
  EXPECT_FALSE(c.datasets[1].qi.has_value());

  EXPECT_EQ(c.transform.noise_mode, NoiseMode::kVariance);
  EXPECT_THAT(c.grids.ep, ElementsAre(0.5, 4));
  EXPECT_THAT(c.grids.base, ElementsAre(1));
  EXPECT_EQ(c.grids.uniq_per, ParameterGrids{}.uniq_per);

  EXPECT_EQ(c.similarity.match_fraction, 0.8);
  EXPECT_EQ(c.similarity.blocking.kind, Blocking::Kind::kSortedNeighborhood);
  EXPECT_EQ(c.similarity.blocking.window, 40U);
  EXPECT_EQ(c.similarity.blocking.column, "age");
  EXPECT_EQ(c.similarity.blocking.auto_threshold, 10U);
  EXPECT_EQ(c.similarity.numeric_scale.at("age"), 2.5);
  EXPECT_TRUE(c.similarity.write_scores);

  EXPECT_EQ(c.eval.cv_folds, 3U);
  EXPECT_EQ(c.eval.mode, FScoreMode::kMacro);
  EXPECT_EQ(c.external_results, "harness.jsonl");
  EXPECT_THAT(c.external_algorithms, ElementsAre("bagging", "boosting"));
  bool saw_c = false;
  for (const auto& [name, values] : c.builtin.grid) {
    if (name == "C") {
      saw_c = true;
      EXPECT_THAT(values, ElementsAre(0.5, 2));
    }
  }
  EXPECT_TRUE(saw_c);

  EXPECT_EQ(c.bayes.rope.lo, -2);
  EXPECT_EQ(c.bayes.rope.hi, 2);
  EXPECT_EQ(c.bayes.n_samples, 1000U);
  EXPECT_THAT(c.bayes.prior, ElementsAre(0, 1, 1));
  EXPECT_THAT(c.scenarios, ElementsAre(Scenario::kVsLowestRisk));
}

TEST(ParseConfig, DefaultsFromMinimalFile) {
  const RunConfig c = parse_config("# comment\n; comment\n[dataset.d]\npath = d.csv\ntarget = y\n");
  EXPECT_EQ(c.seed, 0U);
  EXPECT_EQ(c.out, "deid-out");
  EXPECT_EQ(c.learners, LearnerMode::kBuiltin);
  EXPECT_EQ(c.datasets[0].path, "d.csv");
  EXPECT_EQ(c.scenarios.size(), 3U);
  EXPECT_EQ(c.external_algorithms.size(), 5U);
  EXPECT_EQ(c.similarity.blocking.kind, Blocking::Kind::kAuto);
}

TEST(ParseConfig, Errors) {
  const auto fails = [](const std::string& text, const std::string& needle) {
    EXPECT_THAT([&] { parse_config(text); }, ::testing::ThrowsMessage<ConfigError>(HasSubstr(needle)))
        << text;
  };
  fails("colour = red\n", "unknown key 'colour'");
  fails("[grids]\nepsilon = 1\n", "unknown key '[grids] epsilon'");
  fails("[extras]\na = 1\n", "unknown section [extras]");
  fails("seed = many\n", "not a number");
  fails("[grids]\nep = 1, x\n", "'x' is not a number");
  fails("force = maybe\n", "not a boolean");
  fails("learners = remote\n", "builtin or external");
  fails("[transform]\nnoise_mode = loud\n", "scale or variance");
  fails("[learning]\nfscore = micro\n", "binary or macro");
  fails("[linkage]\nblocking = hashing\n", "[linkage]");
  fails("[stats]\nprior = 1, 1\n", "three values");
  fails("[stats]\nscenarios = vs_everything\n", "unknown scenario");
  fails("[dataset.d]\ntarget = y\n", "[dataset.d] path is required");
  fails("[dataset.d]\npath = d.csv\n", "[dataset.d] target is required");
  fails("[dataset.d]\npath = d.csv\ntarget = y\nweight = 2\n", "unknown key");
  fails("[grids\n", "config line 1");
}

TEST(LoadConfig, ResolvesAgainstFileDirectory) {
  TempDir dir;
  write_file_atomic(dir / "conf/run.ini", "out = o\n[dataset.d]\npath = ../d.csv\ntarget = y\n");
  const RunConfig c = load_config(dir / "conf/run.ini");
  EXPECT_EQ(c.out, dir / "conf/o");
  EXPECT_EQ(c.datasets[0].path, dir / "conf/../d.csv");
  EXPECT_THROW(load_config(dir / "absent.ini"), ConfigError);
}

TEST(Validate, RangeChecks) {
  TempDir dir;
  write_file_atomic(dir / "d.csv", "a,y\n1,p\n2,q\n");
  RunConfig ok;
  ok.datasets.push_back({"d", dir / "d.csv", "y", std::nullopt});
  EXPECT_NO_THROW(validate(ok));

  const auto fails = [&](auto mutate, const std::string& needle) {
    RunConfig c = ok;
    mutate(c);
    EXPECT_THAT([&] { validate(c); }, ::testing::ThrowsMessage<ConfigError>(HasSubstr(needle)));
  };
  fails([](RunConfig& c) { c.datasets.clear(); }, "no [dataset.<name>]");
  fails([](RunConfig& c) { c.datasets.push_back(c.datasets[0]); }, "listed twice");
  fails([&](RunConfig& c) { c.datasets[0].path = dir / "nope.csv"; }, "file not found");
  fails([](RunConfig& c) { c.grids.ep.clear(); }, "grid for noise is empty");
  fails([](RunConfig& c) { c.grids.ep = {0}; }, "ep values");
  fails([](RunConfig& c) { c.grids.base = {-1}; }, "rounding base");
  fails([](RunConfig& c) { c.grids.std_magnitude = {0}; }, "std_magnitude");
  fails([](RunConfig& c) { c.grids.outlier = {-1}; }, "outlier");
  fails([](RunConfig& c) { c.similarity.match_fraction = 0; }, "match_fraction");
  fails([](RunConfig& c) { c.similarity.numeric_scale["a"] = 0; }, "scale for 'a'");
  fails([](RunConfig& c) { c.eval.cv_folds = 1; }, "cv_folds");
  fails([](RunConfig& c) { c.bayes.rope = {1, 1}; }, "rope_lo");
  fails([](RunConfig& c) { c.bayes.n_samples = 0; }, "n_samples");
  fails([](RunConfig& c) { c.bayes.prior = {1, -1, 1}; }, "prior");
  fails([](RunConfig& c) { c.builtin.grid[0].second.clear(); }, "grid is empty");
  fails([](RunConfig& c) {
    c.learners = LearnerMode::kExternal;
    c.external_algorithms.clear();
  }, "algorithms is empty");
}

}  // namespace
}  // namespace deid
