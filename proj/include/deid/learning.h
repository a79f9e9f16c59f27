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

// Predictive-performance protocol for original and transformed datasets.
//
// Rows are dealt into five disjoint stratified test folds; repeat i trains
// on the other four. Within a repeat, hyper-parameters are chosen by a
// stratified 5-fold grid search on the training rows, the chosen
// configuration is refit on all training rows and scored on the test fold.
// The oracle setting instead scores every configuration on the test fold
// and keeps the best.
//
// Labels are encoded as 1 for the positive class and 0 otherwise. The
// positive class is fixed per original dataset (its minority label) so that
// scores of every variant are comparable.

#ifndef DEID_LEARNING_H_
#define DEID_LEARNING_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "deid/tabular.h"

namespace deid {

// --- Splits ------------------------------------------------------------------

struct SplitPlan {
  std::uint64_t seed = 0;
  // Disjoint test folds covering every row; each sorted ascending.
  std::vector<std::vector<std::size_t>> test_folds;

  std::size_t repeats() const { return test_folds.size(); }
  const std::vector<std::size_t>& test(std::size_t repeat) const {
    return test_folds.at(repeat);
  }
  std::vector<std::size_t> train(std::size_t repeat) const;

  nlohmann::json to_json() const;
  static SplitPlan from_json(const nlohmann::json& j);
};

// Stratified assignment of `labels` (one per position) to k folds: each
// class is shuffled with `seed`, classes are concatenated and position i of
// the concatenation goes to fold i mod k. Returns positions per fold.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t k, std::uint64_t seed);

// Throws Error("insufficient minority class") when a label has fewer than
// `n_folds` rows.
SplitPlan make_splits(const Dataset& ds, std::uint64_t seed, std::size_t n_folds = 5);

// --- Metrics -----------------------------------------------------------------

enum class FScoreMode { kBinary, kMacro };

// F1 of `positive`; precision with no positive predictions counts as 0.
double f_score(std::span<const int> predicted, std::span<const int> truth, int positive = 1);

double f_score(std::span<const int> predicted, std::span<const int> truth, FScoreMode mode);

// --- Features ----------------------------------------------------------------

// Train-fitted preprocessing: numeric columns are median-imputed and
// standardized; nominal columns are mode-imputed and one-hot encoded over the
// training levels (unseen levels encode as all zeros).
class FeatureEncoder {
 public:
  static FeatureEncoder fit(const Dataset& ds, std::span<const std::size_t> rows);

  Eigen::MatrixXd transform(const Dataset& ds, std::span<const std::size_t> rows) const;
  std::size_t n_features() const { return n_features_; }

 private:
  struct Feature {
    std::string column;
    bool nominal = false;
    double fill = 0;
    double center = 0;
    double scale = 1;
    std::vector<std::string> levels;
    std::string mode;
  };
  std::vector<Feature> features_;
  std::size_t n_features_ = 0;
};

std::vector<int> encode_labels(const Dataset& ds, std::span<const std::size_t> rows,
                               const std::string& positive);

// --- Learners ----------------------------------------------------------------

using HyperConfig = std::vector<std::pair<std::string, double>>;

nlohmann::json config_to_json(const HyperConfig& config);
HyperConfig config_from_json(const nlohmann::json& j);
double config_value(const HyperConfig& config, std::string_view name);

struct LearnerSpec {
  std::string algorithm;
  // Parameter name and values; the first parameter varies slowest.
  std::vector<std::pair<std::string, std::vector<double>>> grid;

  std::vector<HyperConfig> configurations() const;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual std::vector<int> predict(const Dataset& ds,
                                   std::span<const std::size_t> rows) const = 0;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual const LearnerSpec& spec() const = 0;
  // Throws on failure; callers score a failed fit as 0.
  virtual std::unique_ptr<Model> fit(const Dataset& ds, std::span<const std::size_t> rows,
                                     const std::string& positive, const HyperConfig& config,
                                     Warnings* warnings) const = 0;
};

struct LogisticFit {
  Eigen::VectorXd weights;
  double intercept = 0;
  int iterations = 0;
  bool converged = false;
};

// L2-regularized logistic regression, minimizing
//   C * sum_i log(1 + exp(-s_i (w.x_i + b))) + |w|^2 / 2,   s_i = +/-1,
// by damped Newton steps until half the squared Newton decrement is below
// `tol` or `max_iter` steps were taken. The intercept is not penalized.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                         int max_iter, double tol = 1e-6);

class LogisticModel final : public Model {
 public:
  LogisticModel(FeatureEncoder encoder, LogisticFit fit)
      : encoder_(std::move(encoder)), fit_(std::move(fit)) {}

  std::vector<int> predict(const Dataset& ds,
                           std::span<const std::size_t> rows) const override;
  Eigen::VectorXd decision_function(const Dataset& ds,
                                    std::span<const std::size_t> rows) const;
  const LogisticFit& fit() const { return fit_; }

 private:
  FeatureEncoder encoder_;
  LogisticFit fit_;
};

// Encodes the rows, then fits. Warns when the optimizer hits max_iter.
LogisticModel train_builtin_logreg(const Dataset& ds, std::span<const std::size_t> rows,
                                   const std::string& positive, double c, int max_iter,
                                   Warnings* warnings = nullptr);

class BuiltinLogisticRegression final : public Learner {
 public:
  BuiltinLogisticRegression();
  explicit BuiltinLogisticRegression(LearnerSpec spec) : spec_(std::move(spec)) {}

  // C in {0.001, 1, 10000}, max_iter in {10000, 1000000}.
  static LearnerSpec default_spec();

  const LearnerSpec& spec() const override { return spec_; }
  std::unique_ptr<Model> fit(const Dataset& ds, std::span<const std::size_t> rows,
                             const std::string& positive, const HyperConfig& config,
                             Warnings* warnings) const override;

 private:
  LearnerSpec spec_;
};

// --- Protocol ----------------------------------------------------------------

struct EvalOptions {
  std::size_t cv_folds = 5;
  FScoreMode mode = FScoreMode::kBinary;
};

struct CvResult {
  std::size_t chosen = 0;             // index into configurations()
  HyperConfig config;
  double val_f1 = 0;                  // mean over folds for `config`
  std::vector<double> config_scores;  // mean over folds, per configuration
};

// Ties go to the earliest configuration.
CvResult grid_search_cv(const Dataset& ds, std::span<const std::size_t> train_rows,
                        const Learner& learner, const std::string& positive,
                        std::uint64_t seed, const EvalOptions& options = {},
                        Warnings* warnings = nullptr);

inline constexpr std::string_view kValidationSetting = "validation";
inline constexpr std::string_view kOracleSetting = "oracle";
inline constexpr std::string_view kOriginalVariant = "original";

struct RepeatResult {
  HyperConfig config;
  std::optional<double> val_f1;
  double test_f1 = 0;
};

struct EvalResult {
  std::string dataset;
  std::string variant;
  std::string algorithm;
  std::string setting = std::string(kValidationSetting);
  std::vector<RepeatResult> repeats;

  double mean_val() const;
  double mean_test() const;

  // One JSON object per repeat.
  std::vector<nlohmann::json> to_json_lines() const;
};

EvalResult evaluate(const Dataset& ds, const std::string& variant_label,
                    const Learner& learner, const SplitPlan& plan,
                    const std::string& positive, const EvalOptions& options = {},
                    Warnings* warnings = nullptr);

EvalResult oracle_setting(const Dataset& ds, const std::string& variant_label,
                          const Learner& learner, const SplitPlan& plan,
                          const std::string& positive, const EvalOptions& options = {},
                          Warnings* warnings = nullptr);

// Both settings from one pass: every configuration is trained once per
// repeat, so the oracle and validation scores share their fitted models.
std::pair<EvalResult, EvalResult> evaluate_settings(
    const Dataset& ds, const std::string& variant_label, const Learner& learner,
    const SplitPlan& plan, const std::string& positive, const EvalOptions& options = {},
    Warnings* warnings = nullptr);

}  // namespace deid

#endif  // DEID_LEARNING_H_
