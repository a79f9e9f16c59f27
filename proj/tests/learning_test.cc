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

#include <algorithm>
#include <numeric>
#include <set>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "deid/learning.h"
#include "deid/synthetic.h"
#include "test_util.h"

namespace deid {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using testing::floats;
using testing::nominal;
using testing::sequence;
using testing::with_label;

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// --- Splits ---------------------------------------------------------------

void expect_partition(const SplitPlan& plan, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (std::size_t i = 0; i < plan.repeats(); ++i) {
    for (std::size_t r : plan.test(i)) ++seen[r];
    const auto train = plan.train(i);
    EXPECT_EQ(train.size() + plan.test(i).size(), n);
    std::vector<std::size_t> both;
    std::set_intersection(train.begin(), train.end(), plan.test(i).begin(), plan.test(i).end(),
                          std::back_inserter(both));
    EXPECT_TRUE(both.empty());
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST(Splits, FiveDisjointFoldsCoverEveryRow) {
  const Dataset ds = make_synthetic("s", {.rows = 100, .seed = 1});
  const SplitPlan plan = make_splits(ds, 9);
  ASSERT_EQ(plan.repeats(), 5U);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(plan.test(i).size(), 20U);
  expect_partition(plan, 100);
}

TEST(Splits, UnevenRowCount) {
  const Dataset ds = make_synthetic("s", {.rows = 103, .seed = 2});
  const SplitPlan plan = make_splits(ds, 4);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < 5; ++i) sizes.push_back(plan.test(i).size());
  EXPECT_THAT(sizes, ElementsAre(21, 21, 21, 20, 20));
  expect_partition(plan, 103);
}

TEST(Splits, StratifiedAndDeterministic) {
  const Dataset ds = make_synthetic("s", {.rows = 200, .positive_rate = 0.2, .seed = 3});
  const SplitPlan a = make_splits(ds, 5);
  EXPECT_EQ(a.test_folds, make_splits(ds, 5).test_folds);
  EXPECT_NE(a.test_folds, make_splits(ds, 6).test_folds);
  const auto y = encode_labels(ds, all_rows(ds), ds.minority_label());
  const auto total = std::count(y.begin(), y.end(), 1);
  for (std::size_t i = 0; i < 5; ++i) {
    long pos = 0;
    for (std::size_t r : a.test(i)) pos += y[r];
    EXPECT_LE(std::abs(pos * 5 - total), 5) << "fold " << i;
  }
  EXPECT_EQ(SplitPlan::from_json(a.to_json()).test_folds, a.test_folds);
}

TEST(Splits, InsufficientMinority) {
  std::vector<std::optional<std::string>> y(40, "no");
  y[0] = y[7] = y[20] = "yes";
  const Dataset ds("few", {floats("x", sequence(40, 0.5)), Column::nominal("label", y)}, "label");
  EXPECT_THAT([&] { make_splits(ds, 1); },
              ::testing::ThrowsMessage<Error>(HasSubstr("insufficient minority class")));
  const Dataset tiny = with_label({floats("x", sequence(6, 0.5))});
  EXPECT_THROW(make_splits(tiny, 1), Error);
}

// --- F-score ----------------------------------------------------------------

TEST(FScore, Examples) {
  const std::vector<int> truth = {1, 1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(f_score(truth, truth), 1.0);
  // tp 2, fp 1, fn 1.
  EXPECT_DOUBLE_EQ(f_score(std::vector<int>{1, 0, 1, 0, 1}, truth), 2.0 / 3.0);
  EXPECT_EQ(f_score(std::vector<int>{0, 0, 0, 0, 0}, truth), 0.0);
  EXPECT_EQ(f_score(std::vector<int>{0, 0}, std::vector<int>{0, 0}), 0.0);
  // Class 0: tp 1, fp 1, fn 1 -> 0.5.
  EXPECT_DOUBLE_EQ(f_score(std::vector<int>{1, 0, 1, 0, 1}, truth, FScoreMode::kMacro),
                   (2.0 / 3.0 + 0.5) / 2);
  EXPECT_THROW(f_score(std::vector<int>{1}, truth), Error);
  EXPECT_THROW(f_score(std::vector<int>{}, std::vector<int>{}), Error);
}

// --- Logistic regression ------------------------------------------------------

struct LogisticOracle {
  double c;
  double w0, w1, b;
};

// Reference values from tests/oracles/logistic_oracle.py (scikit-learn).
TEST(FitLogistic, MatchesReferenceSolutions) {
  Eigen::MatrixXd x(12, 2);
  x << 0.5, 1.2, 1.5, -0.3, -0.7, 0.8, 2.0, 1.0, -1.2, -0.5, 0.3, -1.4, 1.1, 0.6, -0.4, -0.9,
      0.9, 2.1, -1.8, 0.4, 0.0, 0.0, 1.3, -1.1;
  const std::vector<int> y = {1, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0};
  const LogisticOracle cases[] = {
      {0.1, 0.30419499, 0.27133154, -0.13005710},
      {1.0, 1.03925314, 1.02396679, -0.40616942},
      {10.0, 2.00818327, 2.19728851, -0.66551967},
  };
  for (const auto& o : cases) {
    const LogisticFit fit = fit_logistic(x, y, o.c, 100, 1e-14);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.weights(0), o.w0, 1e-5) << o.c;
    EXPECT_NEAR(fit.weights(1), o.w1, 1e-5) << o.c;
    EXPECT_NEAR(fit.intercept, o.b, 1e-5) << o.c;
  }
}

TEST(FitLogistic, DuplicatedRowsEqualDoubledC) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 30;
    Eigen::MatrixXd x(n, 3), xx(2 * n, 3);
    std::vector<int> y(n), yy(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = uniform01(rng) * 4 - 2;
      y[i] = uniform01(rng) < 0.5 + 0.2 * x(i, 0);
      xx.row(i) = xx.row(n + i) = x.row(i);
      yy[i] = yy[n + i] = y[i];
    }
    const double c = 0.05 + uniform01(rng) * 2;
    const auto a = fit_logistic(xx, yy, c, 200, 1e-14);
    const auto b = fit_logistic(x, y, 2 * c, 200, 1e-14);
    EXPECT_TRUE((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-6);
    EXPECT_NEAR(a.intercept, b.intercept, 1e-6);
  }
}

TEST(FitLogistic, RejectsBadInput) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0, 1}, 0, 10), Error);
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0}, 1, 10), Error);
}

TEST(FitLogistic, MaxIterWarning) {
  const Dataset ds = make_separable("sep", 100, 1);
  Warnings w;
  const auto model = train_builtin_logreg(ds, all_rows(ds), "yes", 1e6, 1, &w);
  EXPECT_FALSE(model.fit().converged);
  EXPECT_EQ(w.size(), 1U);
}

TEST(FeatureEncoder, OneHotWithUnseenLevels) {
  const Dataset ds = with_label({nominal("c", {"a", "b", "a", "z", "b", "a"}), floats("x", {1, 2, 3, 4, 5, 6})});
  const std::vector<std::size_t> train = {0, 1, 2, 4, 5};
  const FeatureEncoder enc = FeatureEncoder::fit(ds, train);
  EXPECT_EQ(enc.n_features(), 3U);
  const std::vector<std::size_t> unseen = {3};
  const Eigen::MatrixXd x = enc.transform(ds, unseen);
  EXPECT_EQ(x(0, 0), 0.0);
  EXPECT_EQ(x(0, 1), 0.0);
}

// --- Grids and protocol ----------------------------------------------------------

TEST(LearnerSpec, FirstParameterVariesSlowest) {
  const auto configs = BuiltinLogisticRegression::default_spec().configurations();
  ASSERT_EQ(configs.size(), 6U);
  EXPECT_EQ(config_value(configs[0], "C"), 0.001);
  EXPECT_EQ(config_value(configs[1], "C"), 0.001);
  EXPECT_EQ(config_value(configs[1], "max_iter"), 1e6);
  EXPECT_EQ(config_value(configs[5], "C"), 10000);
  EXPECT_EQ(config_from_json(config_to_json(configs[3])), configs[3]);
  EXPECT_THROW(config_value(configs[0], "gamma"), Error);
}

LearnerSpec single_config() { return {"logistic_regression", {{"C", {1}}, {"max_iter", {100}}}}; }

TEST(Evaluate, FiveRepeatsOnSeparableData) {
  const Dataset ds = make_separable("sep", 500, 4);
  const SplitPlan plan = make_splits(ds, 1);
  const BuiltinLogisticRegression learner;
  const EvalResult r = evaluate(ds, "original", learner, plan, ds.minority_label());
  ASSERT_EQ(r.repeats.size(), 5U);
  EXPECT_EQ(r.setting, "validation");
  EXPECT_EQ(r.algorithm, "logistic_regression");
  for (const auto& rep : r.repeats) {
    EXPECT_TRUE(rep.val_f1.has_value());
    EXPECT_EQ(rep.config.size(), 2U);
  }
  EXPECT_GE(r.mean_test(), 0.95);
  const auto lines = r.to_json_lines();
  ASSERT_EQ(lines.size(), 5U);
  EXPECT_EQ(lines[4].at("repeat"), 4);
  EXPECT_EQ(lines[0].at("variant"), "original");
}

TEST(Evaluate, ConstantFeaturePredictsMajority) {
  const Dataset ds = with_label({floats("x", std::vector<double>(60, 1.5))});
  const SplitPlan plan = make_splits(ds, 2);
  const BuiltinLogisticRegression learner(single_config());
  EXPECT_EQ(evaluate(ds, "c", learner, plan, "yes").mean_test(), 0.0);
}

TEST(Evaluate, OracleDominatesValidation) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset ds = make_synthetic("s", {.rows = 250, .signal = 0.6, .seed = seed});
    const SplitPlan plan = make_splits(ds, seed);
    const BuiltinLogisticRegression learner;
    const auto [val, oracle] = evaluate_settings(ds, "v", learner, plan, ds.minority_label());
    EXPECT_EQ(oracle.setting, "oracle");
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_GE(oracle.repeats[i].test_f1, val.repeats[i].test_f1);
      EXPECT_TRUE(oracle.repeats[i].val_f1.has_value());
    }
    // evaluate() is the validation half of evaluate_settings().
    const EvalResult alone = evaluate(ds, "v", learner, plan, ds.minority_label());
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(alone.repeats[i].test_f1, val.repeats[i].test_f1);
      EXPECT_EQ(alone.repeats[i].config, val.repeats[i].config);
    }
    const EvalResult oracle_only = oracle_setting(ds, "v", learner, plan, ds.minority_label());
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(oracle_only.repeats[i].test_f1, oracle.repeats[i].test_f1);
    }
  }
}

TEST(Evaluate, SingleConfigurationSettingsAgree) {
  const Dataset ds = make_synthetic("s", {.rows = 200, .seed = 5});
  const SplitPlan plan = make_splits(ds, 5);
  const BuiltinLogisticRegression learner(single_config());
  const auto [val, oracle] = evaluate_settings(ds, "v", learner, plan, ds.minority_label());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(val.repeats[i].test_f1, oracle.repeats[i].test_f1);
}

TEST(Evaluate, OracleIsElementwiseMaxOverConfigurations) {
  const Dataset ds = make_synthetic("s", {.rows = 200, .signal = 0.5, .seed = 6});
  const SplitPlan plan = make_splits(ds, 6);
  const std::vector<double> cs = {0.001, 1, 100};
  const BuiltinLogisticRegression all({"logistic_regression", {{"C", cs}, {"max_iter", {100}}}});
  const EvalResult oracle = oracle_setting(ds, "v", all, plan, ds.minority_label());
  std::vector<double> best(5, 0);
  for (double c : cs) {
    const BuiltinLogisticRegression one({"logistic_regression", {{"C", {c}}, {"max_iter", {100}}}});
    const EvalResult r = oracle_setting(ds, "v", one, plan, ds.minority_label());
    for (std::size_t i = 0; i < 5; ++i) best[i] = std::max(best[i], r.repeats[i].test_f1);
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(oracle.repeats[i].test_f1, best[i]);
}

TEST(Evaluate, IdenticalCopyScoresIdentically) {
  const Dataset ds = make_synthetic("s", {.rows = 150, .seed = 7});
  const Dataset copy = ds.with_name("copy");
  const SplitPlan plan = make_splits(ds, 7);
  const BuiltinLogisticRegression learner;
  const EvalResult a = evaluate(ds, "original", learner, plan, "yes");
  const EvalResult b = evaluate(copy, "X", learner, plan, "yes");
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.repeats[i].test_f1, b.repeats[i].test_f1);
}

TEST(Evaluate, PlanOutsideDatasetIsRejected) {
  const Dataset ds = make_synthetic("s", {.rows = 50, .seed = 7});
  SplitPlan plan = make_splits(ds, 1);
  plan.test_folds[0].push_back(50);
  EXPECT_THROW(evaluate(ds, "v", BuiltinLogisticRegression(), plan, "yes"), Error);
}

}  // namespace
}  // namespace deid
