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

#include "deid/learning.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace deid {
namespace {

void merge(Warnings* into, std::vector<Warnings>& parts) {
  for (auto& part : parts) {
    for (auto& m : part) warn(into, std::move(m));
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::size_t> pick(std::span<const std::size_t> rows,
                              std::span<const std::size_t> positions) {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(rows[p]);
  std::sort(out.begin(), out.end());
  return out;
}

// Fits `config` on `train` and scores it on `test`; a failed fit scores 0.
double fit_and_score(const Dataset& ds, std::span<const std::size_t> train,
                     std::span<const std::size_t> test, const Learner& learner,
                     const std::string& positive, const HyperConfig& config,
                     FScoreMode mode, Warnings* warnings) {
  try {
    const auto model = learner.fit(ds, train, positive, config, warnings);
    const auto predicted = model->predict(ds, test);
    const auto truth = encode_labels(ds, test, positive);
    return f_score(predicted, truth, mode);
  } catch (const std::exception& e) {
    warn(warnings, fmt::format("{} on '{}' with {} failed: {}", learner.spec().algorithm,
                               ds.name(), config_to_json(config).dump(), e.what()));
    return 0.0;
  }
}

std::vector<double> test_scores(const Dataset& ds, std::span<const std::size_t> train,
                                std::span<const std::size_t> test, const Learner& learner,
                                const std::string& positive,
                                const std::vector<HyperConfig>& configs, FScoreMode mode,
                                Warnings* warnings) {
  std::vector<double> scores(configs.size());
  std::vector<Warnings> local(configs.size());
  parallel_for(configs.size(), [&](std::size_t c) {
    scores[c] = fit_and_score(ds, train, test, learner, positive, configs[c], mode, &local[c]);
  });
  merge(warnings, local);
  return scores;
}

std::uint64_t cv_seed(const SplitPlan& plan, std::size_t repeat) {
  return derive_seed(plan.seed, fmt::format("cv/{}", repeat));
}

EvalResult blank_result(const Dataset& ds, const std::string& label, const Learner& learner,
                        std::string_view setting) {
  EvalResult r;
  r.dataset = ds.name();
  r.variant = label;
  r.algorithm = learner.spec().algorithm;
  r.setting = std::string(setting);
  return r;
}

void check_plan(const Dataset& ds, const SplitPlan& plan) {
  for (const auto& fold : plan.test_folds) {
    for (std::size_t row : fold) {
      if (row >= ds.n_rows()) {
        throw Error(fmt::format("split plan row {} outside '{}' ({} rows)", row, ds.name(),
                                ds.n_rows()));
      }
    }
  }
}

}  // namespace

// --- Splits ------------------------------------------------------------------

std::vector<std::size_t> SplitPlan::train(std::size_t repeat) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < test_folds.size(); ++f) {
    if (f == repeat) continue;
    out.insert(out.end(), test_folds[f].begin(), test_folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json SplitPlan::to_json() const {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t i = 0; i < test_folds.size(); ++i) {
    folds.push_back({{"repeat", i}, {"train", train(i)}, {"test", test_folds[i]}});
  }
  return {{"seed", seed}, {"repeats", folds}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
  SplitPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& r : j.at("repeats")) {
    plan.test_folds.push_back(r.at("test").get<std::vector<std::size_t>>());
  }
  return plan;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels,
                                                       std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error("need at least one fold");
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(labels.size());
  for (auto& [label, members] : by_label) {
    // Fisher-Yates with the portable uniform.
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(members[i - 1], members[j]);
    }
    order.insert(order.end(), members.begin(), members.end());
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

SplitPlan make_splits(const Dataset& ds, std::uint64_t seed, std::size_t n_folds) {
  if (ds.n_rows() < 2 * n_folds) {
    throw Error(fmt::format("'{}' has {} rows; at least {} are needed", ds.name(),
                            ds.n_rows(), 2 * n_folds));
  }
  std::vector<std::size_t> all(ds.n_rows());
  std::iota(all.begin(), all.end(), 0);
  const auto labels = encode_labels(ds, all, ds.minority_label());
  const auto minority = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (minority < n_folds) {
    throw Error(fmt::format("insufficient minority class in '{}': {} rows of '{}'",
                            ds.name(), minority, ds.minority_label()));
  }
  SplitPlan plan;
  plan.seed = seed;
  plan.test_folds = stratified_folds(labels, n_folds, seed);
  return plan;
}

// --- Metrics -----------------------------------------------------------------

double f_score(std::span<const int> predicted, std::span<const int> truth, int positive) {
  if (predicted.size() != truth.size()) {
    throw Error(fmt::format("f_score: {} predictions for {} labels", predicted.size(),
                            truth.size()));
  }
  if (truth.empty()) throw Error("f_score: empty sequences");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == positive;
    const bool t = truth[i] == positive;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

double f_score(std::span<const int> predicted, std::span<const int> truth, FScoreMode mode) {
  if (mode == FScoreMode::kBinary) return f_score(predicted, truth, 1);
  return 0.5 * (f_score(predicted, truth, 1) + f_score(predicted, truth, 0));
}

// --- Features ----------------------------------------------------------------

FeatureEncoder FeatureEncoder::fit(const Dataset& ds, std::span<const std::size_t> rows) {
  FeatureEncoder enc;
  for (const auto& col : ds.columns()) {
    if (col.name() == ds.target()) continue;
    Feature f;
    f.column = col.name();
    if (is_numeric(col.kind())) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (std::size_t r : rows) values.push_back(col.number(r));
      f.fill = quantile(values, 0.5);
      if (std::isnan(f.fill)) f.fill = 0;
      for (double& v : values) {
        if (std::isnan(v)) v = f.fill;
      }
      f.center = mean(values);
      f.scale = stddev(values, 0);
      if (!(f.scale > 0)) f.scale = 1;
      enc.n_features_ += 1;
    } else {
      f.nominal = true;
      std::map<std::string, std::size_t> counts;
      for (std::size_t r : rows) {
        if (const auto& t = col.text(r)) ++counts[*t];
      }
      std::size_t best = 0;
      for (const auto& [level, n] : counts) {
        f.levels.push_back(level);
        if (n > best) {
          best = n;
          f.mode = level;
        }
      }
      enc.n_features_ += f.levels.size();
    }
    enc.features_.push_back(std::move(f));
  }
  return enc;
}

Eigen::MatrixXd FeatureEncoder::transform(const Dataset& ds,
                                          std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(n_features_));
  Eigen::Index offset = 0;
  for (const auto& f : features_) {
    const Column& col = ds.column(f.column);
    if (!f.nominal) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double v = col.number(rows[i]);
        if (std::isnan(v)) v = f.fill;
        x(static_cast<Eigen::Index>(i), offset) = (v - f.center) / f.scale;
      }
      offset += 1;
      continue;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& t = col.text(rows[i]);
      const std::string& level = t ? *t : f.mode;
      auto it = std::lower_bound(f.levels.begin(), f.levels.end(), level);
      if (it != f.levels.end() && *it == level) {
        x(static_cast<Eigen::Index>(i), offset + (it - f.levels.begin())) = 1.0;
      }
    }
    offset += static_cast<Eigen::Index>(f.levels.size());
  }
  return x;
}

std::vector<int> encode_labels(const Dataset& ds, std::span<const std::size_t> rows,
                               const std::string& positive) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(ds.target_label(r) == positive ? 1 : 0);
  return y;
}

// --- Learners ----------------------------------------------------------------

nlohmann::json config_to_json(const HyperConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : config) j[name] = value;
  return j;
}

HyperConfig config_from_json(const nlohmann::json& j) {
  HyperConfig config;
  for (const auto& [name, value] : j.items()) {
    if (value.is_number()) config.emplace_back(name, value.get<double>());
  }
  return config;
}

double config_value(const HyperConfig& config, std::string_view name) {
  for (const auto& [key, value] : config) {
    if (key == name) return value;
  }
  throw Error(fmt::format("configuration has no '{}'", name));
}

std::vector<HyperConfig> LearnerSpec::configurations() const {
  std::vector<HyperConfig> out(1);
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw Error(fmt::format("{}: empty grid for '{}'", algorithm, name));
    std::vector<HyperConfig> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (double v : values) {
        auto c = partial;
        c.emplace_back(name, v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, double c,
                         int max_iter, double tol) {
  if (!(c > 0)) throw Error(fmt::format("C must be positive, got {}", c));
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n != static_cast<Eigen::Index>(y.size())) throw Error("fit_logistic: shape mismatch");

  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target(i) = y[static_cast<std::size_t>(i)];

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd z = xa * beta;
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      loss += target(i) > 0.5 ? softplus(-z(i)) : softplus(z(i));
    }
    return c * loss + 0.5 * beta.head(d).squaredNorm();
  };

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  double f = objective(beta);
  for (fit.iterations = 0; fit.iterations < max_iter; ++fit.iterations) {
    const Eigen::VectorXd z = xa * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1 - p(i));
    }
    Eigen::VectorXd grad = c * (xa.transpose() * (p - target));
    grad.head(d) += beta.head(d);
    Eigen::MatrixXd hess = c * (xa.transpose() * w.asDiagonal() * xa);
    hess.diagonal().head(d).array() += 1.0;
    hess(d, d) += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    const double decrement = grad.dot(step);
    if (!std::isfinite(decrement)) break;
    if (decrement / 2 <= tol) {
      fit.converged = true;
      break;
    }
    double t = 1.0;
    Eigen::VectorXd candidate = beta - step;
    double fc = objective(candidate);
    while (fc > f - 0.25 * t * decrement && t > 1e-12) {
      t *= 0.5;
      candidate = beta - t * step;
      fc = objective(candidate);
    }
    if (fc >= f) {
      // No further decrease is representable.
      fit.converged = true;
      break;
    }
    beta = std::move(candidate);
    f = fc;
  }
  fit.weights = beta.head(d);
  fit.intercept = beta(d);
  return fit;
}

Eigen::VectorXd LogisticModel::decision_function(const Dataset& ds,
                                                 std::span<const std::size_t> rows) const {
  const Eigen::MatrixXd x = encoder_.transform(ds, rows);
  return (x * fit_.weights).array() + fit_.intercept;
}

std::vector<int> LogisticModel::predict(const Dataset& ds,
                                        std::span<const std::size_t> rows) const {
  const Eigen::VectorXd z = decision_function(ds, rows);
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = z(static_cast<Eigen::Index>(i)) >= 0;
  return out;
}

LogisticModel train_builtin_logreg(const Dataset& ds, std::span<const std::size_t> rows,
                                   const std::string& positive, double c, int max_iter,
                                   Warnings* warnings) {
  auto encoder = FeatureEncoder::fit(ds, rows);
  const Eigen::MatrixXd x = encoder.transform(ds, rows);
  const auto y = encode_labels(ds, rows, positive);
  auto fit = fit_logistic(x, y, c, max_iter);
  if (!fit.converged) {
    warn(warnings, fmt::format("logistic regression on '{}' (C={}) stopped at max_iter={}",
                               ds.name(), c, max_iter));
  }
  return LogisticModel(std::move(encoder), std::move(fit));
}

BuiltinLogisticRegression::BuiltinLogisticRegression() : spec_(default_spec()) {}

LearnerSpec BuiltinLogisticRegression::default_spec() {
  return {"logistic_regression", {{"C", {0.001, 1, 10000}}, {"max_iter", {1e4, 1e6}}}};
}

std::unique_ptr<Model> BuiltinLogisticRegression::fit(const Dataset& ds,
                                                      std::span<const std::size_t> rows,
                                                      const std::string& positive,
                                                      const HyperConfig& config,
                                                      Warnings* warnings) const {
  const double c = config_value(config, "C");
  const auto max_iter = static_cast<int>(config_value(config, "max_iter"));
  return std::make_unique<LogisticModel>(
      train_builtin_logreg(ds, rows, positive, c, max_iter, warnings));
}

// --- Protocol ----------------------------------------------------------------

CvResult grid_search_cv(const Dataset& ds, std::span<const std::size_t> train_rows,
                        const Learner& learner, const std::string& positive,
                        std::uint64_t seed, const EvalOptions& options, Warnings* warnings) {
  const auto configs = learner.spec().configurations();
  const auto labels = encode_labels(ds, train_rows, positive);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t minority = std::min(positives, labels.size() - positives);
  if (minority < options.cv_folds) {
    throw Error(fmt::format("grid search on '{}': minority class has {} training rows, "
                            "fewer than {} folds",
                            ds.name(), minority, options.cv_folds));
  }
  const auto folds = stratified_folds(labels, options.cv_folds, seed);
  std::vector<std::vector<std::size_t>> fit_rows(folds.size()), val_rows(folds.size());
  for (std::size_t k = 0; k < folds.size(); ++k) {
    val_rows[k] = pick(train_rows, folds[k]);
    for (std::size_t j = 0; j < folds.size(); ++j) {
      if (j == k) continue;
      auto part = pick(train_rows, folds[j]);
      fit_rows[k].insert(fit_rows[k].end(), part.begin(), part.end());
    }
    std::sort(fit_rows[k].begin(), fit_rows[k].end());
  }

  const std::size_t cells = configs.size() * folds.size();
  std::vector<double> scores(cells);
  std::vector<Warnings> local(cells);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t c = cell / folds.size();
    const std::size_t k = cell % folds.size();
    scores[cell] = fit_and_score(ds, fit_rows[k], val_rows[k], learner, positive, configs[c],
                                 options.mode, &local[cell]);
  });
  merge(warnings, local);

  CvResult result;
  result.config_scores.resize(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    double sum = 0;
    for (std::size_t k = 0; k < folds.size(); ++k) sum += scores[c * folds.size() + k];
    result.config_scores[c] = sum / static_cast<double>(folds.size());
    if (result.config_scores[c] > result.config_scores[result.chosen]) result.chosen = c;
  }
  result.config = configs[result.chosen];
  result.val_f1 = result.config_scores[result.chosen];
  return result;
}

double EvalResult::mean_val() const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : repeats) {
    if (r.val_f1) {
      sum += *r.val_f1;
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

double EvalResult::mean_test() const {
  if (repeats.empty()) return std::nan("");
  double sum = 0;
  for (const auto& r : repeats) sum += r.test_f1;
  return sum / static_cast<double>(repeats.size());
}

std::vector<nlohmann::json> EvalResult::to_json_lines() const {
  std::vector<nlohmann::json> out;
  for (std::size_t i = 0; i < repeats.size(); ++i) {
    const auto& r = repeats[i];
    out.push_back({{"dataset", dataset},
                   {"variant", variant},
                   {"algorithm", algorithm},
                   {"setting", setting},
                   {"repeat", i},
                   {"config", config_to_json(r.config)},
                   {"val_f1", r.val_f1 ? nlohmann::json(*r.val_f1) : nlohmann::json(nullptr)},
                   {"test_f1", r.test_f1}});
  }
  return out;
}

EvalResult evaluate(const Dataset& ds, const std::string& variant_label,
                    const Learner& learner, const SplitPlan& plan,
                    const std::string& positive, const EvalOptions& options,
                    Warnings* warnings) {
  check_plan(ds, plan);
  EvalResult result = blank_result(ds, variant_label, learner, kValidationSetting);
  result.repeats.resize(plan.repeats());
  std::vector<Warnings> local(plan.repeats());
  parallel_for(plan.repeats(), [&](std::size_t i) {
    const auto train = plan.train(i);
    auto& out = result.repeats[i];
    try {
      const auto cv = grid_search_cv(ds, train, learner, positive, cv_seed(plan, i), options,
                                     &local[i]);
      out.config = cv.config;
      out.val_f1 = cv.val_f1;
      out.test_f1 = fit_and_score(ds, train, plan.test(i), learner, positive, cv.config,
                                  options.mode, &local[i]);
    } catch (const std::exception& e) {
      warn(&local[i], fmt::format("repeat {} of '{}' failed: {}", i, ds.name(), e.what()));
      out.test_f1 = 0;
    }
  });
  merge(warnings, local);
  return result;
}

EvalResult oracle_setting(const Dataset& ds, const std::string& variant_label,
                          const Learner& learner, const SplitPlan& plan,
                          const std::string& positive, const EvalOptions& options,
                          Warnings* warnings) {
  check_plan(ds, plan);
  const auto configs = learner.spec().configurations();
  EvalResult result = blank_result(ds, variant_label, learner, kOracleSetting);
  result.repeats.resize(plan.repeats());
  std::vector<Warnings> local(plan.repeats());
  parallel_for(plan.repeats(), [&](std::size_t i) {
    const auto scores = test_scores(ds, plan.train(i), plan.test(i), learner, positive,
                                    configs, options.mode, &local[i]);
    const auto best = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    result.repeats[i].config = configs[best];
    result.repeats[i].test_f1 = scores[best];
  });
  merge(warnings, local);
  return result;
}

std::pair<EvalResult, EvalResult> evaluate_settings(
    const Dataset& ds, const std::string& variant_label, const Learner& learner,
    const SplitPlan& plan, const std::string& positive, const EvalOptions& options,
    Warnings* warnings) {
  check_plan(ds, plan);
  const auto configs = learner.spec().configurations();
  EvalResult validation = blank_result(ds, variant_label, learner, kValidationSetting);
  EvalResult oracle = blank_result(ds, variant_label, learner, kOracleSetting);
  validation.repeats.resize(plan.repeats());
  oracle.repeats.resize(plan.repeats());
  std::vector<Warnings> local(plan.repeats());
  parallel_for(plan.repeats(), [&](std::size_t i) {
    const auto train = plan.train(i);
    const auto scores = test_scores(ds, train, plan.test(i), learner, positive, configs,
                                    options.mode, &local[i]);
    const auto best = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    oracle.repeats[i].config = configs[best];
    oracle.repeats[i].test_f1 = scores[best];
    try {
      const auto cv = grid_search_cv(ds, train, learner, positive, cv_seed(plan, i), options,
                                     &local[i]);
      validation.repeats[i] = {cv.config, cv.val_f1, scores[cv.chosen]};
      oracle.repeats[i].val_f1 = cv.config_scores[best];
    } catch (const std::exception& e) {
      warn(&local[i], fmt::format("repeat {} of '{}' failed: {}", i, ds.name(), e.what()));
      validation.repeats[i].test_f1 = 0;
    }
  });
  merge(warnings, local);
  return {std::move(validation), std::move(oracle)};
}

}  // namespace deid
