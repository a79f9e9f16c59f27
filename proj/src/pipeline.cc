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

#include "deid/pipeline.h"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "deid/io.h"
#include "deid/tuning.h"

namespace deid {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestSchema = "deidbench.manifest/1";
constexpr std::string_view kTaskSchema = "deidbench.task/1";

void merge(Warnings* sink, std::vector<Warnings>& parts) {
  for (auto& part : parts) {
    for (auto& w : part) warn(sink, std::move(w));
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// Manifest paths use forward slashes so the file travels between machines.
std::string portable(const fs::path& p) { return p.generic_string(); }

fs::path split_path(const RunConfig& config, const std::string& dataset) {
  return config.out / dataset / "splits.json";
}

json spec_to_json(const VariantSpec& spec) {
  json techniques = json::array();
  json params = json::object();
  for (Technique t : spec.techniques) {
    const std::string letter(1, technique_letter(t));
    techniques.push_back(letter);
    if (auto it = spec.params.find(t); it != spec.params.end()) params[letter] = it->second;
  }
  return {{"techniques", techniques}, {"params", params}, {"seed", spec.seed}};
}

Technique letter_to_technique(const std::string& letter) {
  const auto t = letter.size() == 1 ? technique_from_letter(letter[0]) : std::nullopt;
  if (!t) throw Error(fmt::format("unknown technique '{}'", letter));
  return *t;
}

VariantSpec spec_from_json(const json& j) {
  VariantSpec spec;
  for (const auto& t : j.at("techniques")) spec.techniques.push_back(letter_to_technique(t));
  for (const auto& [letter, value] : j.at("params").items()) {
    spec.params[letter_to_technique(letter)] = value.get<double>();
  }
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

bool manifest_matches(const RunConfig& config, const VariantManifest& m) {
  if (m.seed != config.seed) return false;
  for (const auto& in : config.datasets) {
    if (m.find(in.name) == nullptr) return false;
  }
  for (const auto& d : m.datasets) {
    if (!fs::exists(config.out / d.original)) return false;
    for (const auto& v : d.variants) {
      if (!fs::exists(config.out / v.path)) return false;
    }
  }
  return true;
}

DatasetEntry transform_dataset(const RunConfig& config, const DatasetInput& input,
                               Warnings* warnings) {
  const Dataset raw = load_csv(input.path, input.target, input.qi).with_name(input.name);
  const Dataset ds = drop_direct_identifiers(raw, warnings);

  DatasetEntry e;
  e.name = input.name;
  e.target = ds.target();
  e.positive_label = ds.minority_label();
  e.qi = ds.qi();
  e.source = input.path;
  e.original = fs::path(input.name) / "original.csv";
  e.tuning = fs::path(input.name) / "tuning.json";
  write_csv(ds, config.out / e.original);

  const std::uint64_t seed = transform_seed(config, input.name);
  const auto applicable = applicable_techniques(ds, config.grids);
  e.applicable.assign(applicable.begin(), applicable.end());
  if (applicable.empty()) warn(warnings, "no applicable technique; no variants generated");

  json tuning = json::array();
  for (Technique t : e.applicable) {
    const auto sel = select_best_param(ds, t, config.grids.grid(t), config.similarity, seed,
                                       config.transform, warnings);
    e.chosen[t] = sel.chosen;
    tuning.push_back(sel.to_json(input.name));
  }
  write_json(config.out / e.tuning, tuning);

  const auto specs = enumerate_variants(ds, e.chosen, seed, config.grids, warnings);
  e.variants.resize(specs.size());
  std::vector<Warnings> local(specs.size());
  parallel_for(specs.size(), [&](std::size_t k) {
    const Dataset variant = apply_variant(ds, specs[k], config.transform, &local[k]);
    VariantEntry& v = e.variants[k];
    v.label = specs[k].label();
    v.spec = specs[k];
    v.path = fs::path(input.name) / "variants" / (v.label + ".csv");
    v.risk_path = fs::path(input.name) / "variants" / (v.label + ".risk.json");
    write_csv(variant.with_name(v.label), config.out / v.path);
  });
  merge(warnings, local);
  return e;
}

void prefix_into(Warnings* sink, const std::string& prefix, const Warnings& items) {
  for (const auto& w : items) warn(sink, fmt::format("{}: {}", prefix, w));
}

SplitPlan dataset_splits(const RunConfig& config, const DatasetEntry& e, const Dataset& original) {
  const fs::path path = split_path(config, e.name);
  if (!config.force && fs::exists(path)) {
    SplitPlan plan = SplitPlan::from_json(read_json(path));
    std::size_t covered = 0;
    for (const auto& f : plan.test_folds) covered += f.size();
    if (plan.seed == split_seed(config, e.name) && covered == original.n_rows()) return plan;
  }
  SplitPlan plan = make_splits(original, split_seed(config, e.name), 5);
  write_json(path, plan.to_json());
  return plan;
}

fs::path external_results_path(const RunConfig& config) {
  return config.external_results.is_absolute() ? config.external_results
                                               : config.out / config.external_results;
}

fs::path builtin_result_path(const RunConfig& config, const std::string& dataset,
                             const std::string& label) {
  return config.out / dataset / "results" / (label + ".jsonl");
}

std::vector<EvalResult> evaluate_builtin(const RunConfig& config, const VariantManifest& manifest,
                                         Warnings* warnings) {
  const BuiltinLogisticRegression learner(config.builtin);
  std::vector<EvalResult> all;
  for (const auto& e : manifest.datasets) {
    Warnings dw;
    std::vector<EvalResult> ds_results;
    try {
      const Dataset original = load_original(config, e);
      const SplitPlan plan = dataset_splits(config, e, original);

      std::vector<std::string> labels = {std::string(kOriginalVariant)};
      for (const auto& v : e.variants) labels.push_back(v.label);
      std::vector<std::pair<EvalResult, EvalResult>> cells(labels.size());
      std::vector<Warnings> local(labels.size());
      parallel_for(labels.size(), [&](std::size_t k) {
        const fs::path path = builtin_result_path(config, e.name, labels[k]);
        if (!config.force && fs::exists(path)) {
          auto cached = parse_results(read_file(path));
          if (cached.size() == 2) {
            cells[k] = {std::move(cached[0]), std::move(cached[1])};
            return;
          }
        }
        const Dataset ds = k == 0 ? original : load_variant(config, e, e.variants[k - 1]);
        cells[k] = evaluate_settings(ds, labels[k], learner, plan, e.positive_label, config.eval,
                                     &local[k]);
        cells[k].first.dataset = cells[k].second.dataset = e.name;
        write_file_atomic(path, results_to_jsonl({cells[k].first, cells[k].second}));
      });
      merge(&dw, local);
      for (auto& [validation, oracle] : cells) {
        ds_results.push_back(std::move(validation));
        ds_results.push_back(std::move(oracle));
      }
    } catch (const Error& ex) {
      warn(&dw, fmt::format("evaluation skipped: {}", ex.what()));
      ds_results.clear();
    }
    prefix_into(warnings, e.name, dw);
    for (auto& r : ds_results) all.push_back(std::move(r));
  }
  write_file_atomic(results_path(config), results_to_jsonl(all));
  return all;
}

std::vector<EvalResult> evaluate_external(const RunConfig& config,
                                          const VariantManifest& manifest, Warnings* warnings) {
  const fs::path task = task_path(config);
  write_json(task, make_task(config, manifest));
  const fs::path ext = external_results_path(config);
  if (!fs::exists(ext)) {
    throw StageError(fmt::format(
        "external results not found at {}; run the harness on the task file first: "
        "harness --task {} --out {}",
        ext.string(), task.string(), ext.string()));
  }
  const std::string text = read_file(ext);
  Warnings hw;
  auto results = parse_results(text, &hw);
  prefix_into(warnings, "harness", hw);

  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : results) {
    const DatasetEntry* e = manifest.find(r.dataset);
    if (e == nullptr) {
      throw StageError(fmt::format("{}: unknown dataset '{}'", ext.string(), r.dataset));
    }
    const bool known = r.variant == kOriginalVariant ||
                       std::any_of(e->variants.begin(), e->variants.end(),
                                   [&](const VariantEntry& v) { return v.label == r.variant; });
    if (!known) {
      throw StageError(fmt::format("{}: unknown variant '{}' of '{}'", ext.string(), r.variant,
                                   r.dataset));
    }
    if (r.setting == kValidationSetting) seen.emplace(r.dataset, r.variant, r.algorithm);
  }
  for (const auto& e : manifest.datasets) {
    std::vector<std::string> labels = {std::string(kOriginalVariant)};
    for (const auto& v : e.variants) labels.push_back(v.label);
    for (const auto& label : labels) {
      for (const auto& alg : config.external_algorithms) {
        if (seen.count({e.name, label, alg}) == 0U) {
          warn(warnings, fmt::format("harness: no results for {}/{}/{}", e.name, label, alg));
        }
      }
    }
  }
  write_file_atomic(results_path(config), text);
  return results;
}

std::string number_cell(double v) { return fmt::format("{}", v); }

std::string safe_name(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
  }
  return out;
}

}  // namespace

// --- Manifest ----------------------------------------------------------------

const DatasetEntry* VariantManifest::find(std::string_view dataset) const {
  for (const auto& d : datasets) {
    if (d.name == dataset) return &d;
  }
  return nullptr;
}

json VariantManifest::to_json() const {
  json items = json::array();
  for (const auto& d : datasets) {
    json applicable = json::array();
    for (Technique t : d.applicable) applicable.push_back(std::string(1, technique_letter(t)));
    json chosen = json::object();
    for (const auto& [t, v] : d.chosen) chosen[std::string(1, technique_letter(t))] = v;
    json variants = json::array();
    for (const auto& v : d.variants) {
      variants.push_back({{"label", v.label},
                          {"family", v.spec.family()},
                          {"path", portable(v.path)},
                          {"spec", spec_to_json(v.spec)},
                          {"risk", portable(v.risk_path)}});
    }
    items.push_back({{"name", d.name},
                     {"target", d.target},
                     {"positive_label", d.positive_label},
                     {"qi", d.qi},
                     {"source", portable(d.source)},
                     {"original", portable(d.original)},
                     {"tuning", portable(d.tuning)},
                     {"applicable", applicable},
                     {"chosen", chosen},
                     {"variants", variants},
                     {"warnings", d.warnings}});
  }
  return {{"schema", kManifestSchema}, {"seed", seed}, {"datasets", items}};
}

VariantManifest VariantManifest::from_json(const json& j) {
  if (j.value("schema", std::string{}) != kManifestSchema) {
    throw Error("not a variant manifest (schema mismatch)");
  }
  VariantManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  std::set<std::string> names;
  for (const auto& item : j.at("datasets")) {
    DatasetEntry d;
    d.name = item.at("name").get<std::string>();
    if (!names.insert(d.name).second) throw Error(fmt::format("dataset '{}' repeated", d.name));
    d.target = item.at("target").get<std::string>();
    d.positive_label = item.at("positive_label").get<std::string>();
    d.qi = item.at("qi").get<std::vector<std::string>>();
    d.source = item.at("source").get<std::string>();
    d.original = item.at("original").get<std::string>();
    d.tuning = item.at("tuning").get<std::string>();
    for (const auto& t : item.at("applicable")) d.applicable.push_back(letter_to_technique(t));
    for (const auto& [letter, v] : item.at("chosen").items()) {
      d.chosen[letter_to_technique(letter)] = v.get<double>();
    }
    std::set<std::string> labels;
    for (const auto& v : item.at("variants")) {
      VariantEntry e;
      e.label = v.at("label").get<std::string>();
      if (!labels.insert(e.label).second) {
        throw Error(fmt::format("variant '{}' repeated in '{}'", e.label, d.name));
      }
      e.path = v.at("path").get<std::string>();
      e.spec = spec_from_json(v.at("spec"));
      e.risk_path = v.at("risk").get<std::string>();
      d.variants.push_back(std::move(e));
    }
    d.warnings = item.value("warnings", Warnings{});
    m.datasets.push_back(std::move(d));
  }
  return m;
}

void VariantManifest::save(const fs::path& path) const { write_json(path, to_json()); }

VariantManifest VariantManifest::load(const fs::path& path) {
  return from_json(read_json(path));
}

fs::path manifest_path(const RunConfig& config) { return config.out / "manifest.json"; }
fs::path task_path(const RunConfig& config) { return config.out / "task.json"; }
fs::path results_path(const RunConfig& config) { return config.out / "results.jsonl"; }
fs::path reports_dir(const RunConfig& config) { return config.out / "reports"; }

std::uint64_t transform_seed(const RunConfig& config, std::string_view dataset) {
  return derive_seed(config.seed, fmt::format("transform/{}", dataset));
}

std::uint64_t split_seed(const RunConfig& config, std::string_view dataset) {
  return derive_seed(config.seed, fmt::format("splits/{}", dataset));
}

Dataset load_original(const RunConfig& config, const DatasetEntry& entry) {
  return load_csv(config.out / entry.original, entry.target, entry.qi).with_name(entry.name);
}

Dataset load_variant(const RunConfig& config, const DatasetEntry& entry,
                     const VariantEntry& variant) {
  const Dataset loaded = load_csv(config.out / variant.path, entry.target);
  std::vector<std::string> qi;
  for (const auto& q : entry.qi) {
    if (loaded.find(q) != nullptr) qi.push_back(q);
  }
  return Dataset(variant.label, loaded.columns(), entry.target, qi);
}

// --- Stages ------------------------------------------------------------------

VariantManifest cmd_transform(const RunConfig& config, Warnings* warnings) {
  const fs::path mpath = manifest_path(config);
  if (!config.force && fs::exists(mpath)) {
    VariantManifest cached = VariantManifest::load(mpath);
    if (manifest_matches(config, cached)) return cached;
  }

  const std::size_t n = config.datasets.size();
  std::vector<std::optional<DatasetEntry>> entries(n);
  std::vector<Warnings> local(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& input = config.datasets[i];
    try {
      entries[i] = transform_dataset(config, input, &local[i]);
      entries[i]->warnings = local[i];
    } catch (const std::exception& ex) {
      warn(&local[i], fmt::format("dataset skipped: {}", ex.what()));
    }
  });

  VariantManifest manifest;
  manifest.seed = config.seed;
  for (std::size_t i = 0; i < n; ++i) {
    prefix_into(warnings, config.datasets[i].name, local[i]);
    if (entries[i]) manifest.datasets.push_back(std::move(*entries[i]));
  }
  manifest.save(mpath);
  return manifest;
}

RiskTable cmd_risk(const RunConfig& config, const VariantManifest& manifest,
                   Warnings* warnings) {
  RiskTable table;
  for (const auto& e : manifest.datasets) {
    const Dataset original = load_original(config, e);
    std::vector<RiskReport> reports(e.variants.size());
    std::vector<Warnings> local(e.variants.size());
    std::vector<std::string> failures(e.variants.size());
    parallel_for(e.variants.size(), [&](std::size_t k) {
      const VariantEntry& v = e.variants[k];
      const fs::path path = config.out / v.risk_path;
      try {
        if (!config.force && fs::exists(path)) {
          reports[k] = RiskReport::from_json(read_json(path));
          return;
        }
        const Dataset variant = load_variant(config, e, v);
        RiskReport r = assess_risk(original, variant, config.similarity, v.label, &local[k]);
        if (config.similarity.write_scores) {
          fs::path scores = v.risk_path;
          scores.replace_extension().replace_extension(".scores.csv");
          write_file_atomic(config.out / scores, scores_csv(r));
          r.scores_path = portable(scores);
        }
        write_json(path, r.to_json());
        reports[k] = std::move(r);
      } catch (const std::exception& ex) {
        failures[k] = ex.what();
      }
    });
    for (const auto& w : local) prefix_into(warnings, e.name, w);
    for (std::size_t k = 0; k < failures.size(); ++k) {
      if (!failures[k].empty()) {
        throw StageError(
            fmt::format("risk for {}/{}: {}", e.name, e.variants[k].label, failures[k]));
      }
    }
    table[e.name] = std::move(reports);
  }
  return table;
}

ValueTable risk_values(const VariantManifest& manifest, const RiskTable& risks) {
  ValueTable out;
  for (const auto& e : manifest.datasets) {
    const auto it = risks.find(e.name);
    if (it == risks.end()) continue;
    auto& row = out[e.name];
    for (std::size_t k = 0; k < e.variants.size() && k < it->second.size(); ++k) {
      row[e.variants[k].spec.family()] = it->second[k].risk;
    }
    if (row.empty()) out.erase(e.name);
  }
  return out;
}

json external_algorithm_grids(const std::vector<std::string>& algorithms) {
  const json n_estimators = {100, 250, 500};
  const json max_depth = {4, 6, 8, 10};
  const std::map<std::string, json> known = {
      {"random_forest", {{"n_estimators", n_estimators}, {"max_depth", max_depth}}},
      {"bagging", {{"n_estimators", n_estimators}}},
      {"boosting",
       {{"n_estimators", n_estimators},
        {"max_depth", max_depth},
        {"learning_rate", {0.1, 0.01, 0.001}}}},
      {"logistic_regression", {{"C", {0.001, 1, 10000}}, {"max_iter", {10000, 1000000}}}},
      {"neural_network",
       {{"hidden_layer_fractions",
         {json::array({{1, 1}}), json::array({{1, 2}}), json::array({{2, 3}}),
          json::array({{1, 1}, {1, 2}}), json::array({{1, 1}, {2, 3}}),
          json::array({{1, 2}, {2, 3}}), json::array({{1, 1}, {1, 2}, {2, 3}})}},
        {"alpha", {0.05, 0.001, 0.0001}},
        {"max_iter", {10000, 1000000}}}},
  };
  json out = json::array();
  for (const auto& name : algorithms) {
    const auto it = known.find(name);
    if (it == known.end()) throw ConfigError(fmt::format("unknown external algorithm '{}'", name));
    out.push_back({{"name", name}, {"grid", it->second}});
  }
  return out;
}

json make_task(const RunConfig& config, const VariantManifest& manifest) {
  json datasets = json::array();
  for (const auto& e : manifest.datasets) {
    const Dataset original = load_original(config, e);
    const SplitPlan plan = dataset_splits(config, e, original);
    datasets.push_back({{"name", e.name},
                        {"target", e.target},
                        {"positive_label", e.positive_label},
                        {"splits", plan.to_json()}});
  }
  fs::path results = config.external_results;
  if (results.is_absolute()) results = fs::relative(results, config.out);
  return {{"schema", kTaskSchema},
          {"manifest", "manifest.json"},
          {"results", portable(results)},
          {"seed", config.seed},
          {"cv_folds", config.eval.cv_folds},
          {"fscore", config.eval.mode == FScoreMode::kMacro ? "macro" : "binary"},
          {"datasets", datasets},
          {"algorithms", external_algorithm_grids(config.external_algorithms)}};
}

std::vector<EvalResult> parse_results(std::string_view text, Warnings* warnings) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::size_t> index;
  std::vector<EvalResult> results;
  std::vector<std::vector<std::optional<RepeatResult>>> slots;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fail = [&](const std::string& why) {
      return Error(fmt::format("results line {}: {}", line_no, why));
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("not an object");
    if (j.contains("warning") && !j.contains("test_f1")) {
      warn(warnings, j.at("warning").is_string() ? j.at("warning").get<std::string>()
                                                 : j.at("warning").dump());
      continue;
    }
    for (const char* field : {"dataset", "variant", "algorithm"}) {
      if (!j.contains(field) || !j.at(field).is_string()) {
        throw fail(fmt::format("'{}' must be a string", field));
      }
    }
    if (!j.contains("repeat") || !j.at("repeat").is_number_unsigned()) {
      throw fail("'repeat' must be a non-negative integer");
    }
    if (!j.contains("config") || !j.at("config").is_object()) {
      throw fail("'config' must be an object");
    }
    if (!j.contains("test_f1") || !j.at("test_f1").is_number()) {
      throw fail("'test_f1' must be a number");
    }
    if (!j.contains("val_f1") || !(j.at("val_f1").is_number() || j.at("val_f1").is_null())) {
      throw fail("'val_f1' must be a number or null");
    }
    RepeatResult r;
    r.config = config_from_json(j.at("config"));
    r.test_f1 = j.at("test_f1").get<double>();
    if (j.at("val_f1").is_number()) r.val_f1 = j.at("val_f1").get<double>();
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(r.test_f1) || (r.val_f1 && !in_unit(*r.val_f1))) {
      throw fail("F-scores must lie in [0, 1]");
    }
    const std::string setting = j.value("setting", std::string(kValidationSetting));
    Key key{j.at("dataset").get<std::string>(), j.at("variant").get<std::string>(),
            j.at("algorithm").get<std::string>(), setting};
    auto [it, fresh] = index.emplace(key, results.size());
    if (fresh) {
      EvalResult res;
      std::tie(res.dataset, res.variant, res.algorithm, res.setting) = key;
      results.push_back(std::move(res));
      slots.emplace_back();
    }
    auto& slot = slots[it->second];
    const auto repeat = j.at("repeat").get<std::size_t>();
    if (repeat >= slot.size()) slot.resize(repeat + 1);
    if (slot[repeat]) throw fail(fmt::format("duplicate repeat {}", repeat));
    slot[repeat] = std::move(r);
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t k = 0; k < slots[i].size(); ++k) {
      if (!slots[i][k]) {
        const auto& r = results[i];
        throw Error(fmt::format("results for {}/{}/{}/{} miss repeat {}", r.dataset, r.variant,
                                r.algorithm, r.setting, k));
      }
      results[i].repeats.push_back(std::move(*slots[i][k]));
    }
  }
  return results;
}

std::string results_to_jsonl(const std::vector<EvalResult>& results) {
  std::string out;
  for (const auto& r : results) {
    for (const auto& line : r.to_json_lines()) {
      out += line.dump();
      out.push_back('\n');
    }
  }
  return out;
}

std::vector<EvalResult> cmd_evaluate(const RunConfig& config, const VariantManifest& manifest,
                                     Warnings* warnings) {
  if (config.learners == LearnerMode::kExternal) {
    return evaluate_external(config, manifest, warnings);
  }
  return evaluate_builtin(config, manifest, warnings);
}

AnalysisReport cmd_analyze(const RunConfig& config, const VariantManifest& manifest,
                           const RiskTable& risks, const std::vector<EvalResult>& results,
                           Warnings* warnings) {
  const fs::path dir = reports_dir(config);
  const fs::path summary_path = dir / "summary.json";
  AnalysisReport report;
  if (!config.force && fs::exists(summary_path)) {
    report.summary = read_json(summary_path);
    for (const auto& f : report.summary.at("files")) report.files.push_back(dir / f.get<std::string>());
    return report;
  }

  Warnings aw;
  const auto emit = [&](const std::string& name, const std::string& contents) {
    write_file_atomic(dir / name, contents);
    report.files.push_back(dir / name);
  };

  std::map<std::string, std::map<std::string, std::string>> family;
  for (const auto& e : manifest.datasets) {
    for (const auto& v : e.variants) family[e.name][v.label] = v.spec.family();
  }

  std::map<std::string, std::vector<Solution>> solutions;  // by setting
  std::map<std::string, ValueTable> performance;           // by algorithm, validation F
  ValueTable pooled_perf;
  std::map<std::string, std::map<std::string, std::vector<double>>> pooled_acc;
  for (const auto& r : results) {
    std::string variant;
    if (r.variant == kOriginalVariant) {
      variant = r.variant;
    } else if (auto d = family.find(r.dataset);
               d != family.end() && d->second.count(r.variant) != 0U) {
      variant = d->second.at(r.variant);
    } else {
      warn(&aw, fmt::format("results for unknown variant {}/{} ignored", r.dataset, r.variant));
      continue;
    }
    if (r.repeats.empty()) continue;
    solutions[r.setting].push_back({r.dataset, variant, r.algorithm, r.mean_test()});
    if (r.setting == kValidationSetting && variant != kOriginalVariant) {
      performance[r.algorithm][r.dataset][variant] = r.mean_val();
      pooled_acc[r.dataset][variant].push_back(r.mean_val());
    }
  }
  for (const auto& [ds, by_variant] : pooled_acc) {
    for (const auto& [variant, values] : by_variant) pooled_perf[ds][variant] = mean(values);
  }

  json summary = json::object();
  const ValueTable risk_table = risk_values(manifest, risks);

  const auto rank_json = [](const RankTable& t) {
    json j = json::object();
    for (const auto& v : t.variants) j[v] = t.mean_rank.at(v);
    return j;
  };
  const auto try_rank = [&](const ValueTable& values, RankDirection dir, const std::string& file,
                            const std::string& what) -> json {
    if (values.empty()) {
      warn(&aw, fmt::format("{}: no values to rank", what));
      return nullptr;
    }
    try {
      const RankTable t = rank_variants(values, dir);
      emit(file, t.to_csv());
      return rank_json(t);
    } catch (const Error& e) {
      warn(&aw, fmt::format("{}: {}", what, e.what()));
      return nullptr;
    }
  };

  summary["risk_rank"] = try_rank(risk_table, RankDirection::kAscending, "risk_rank.csv",
                                  "risk rank");
  json perf = json::object();
  perf["mean"] = try_rank(pooled_perf, RankDirection::kDescending, "performance_rank.csv",
                          "performance rank");
  for (const auto& [alg, values] : performance) {
    perf[alg] = try_rank(values, RankDirection::kDescending,
                         fmt::format("performance_rank_{}.csv", safe_name(alg)),
                         fmt::format("performance rank ({})", alg));
  }
  summary["performance_rank"] = perf;

  json scenarios = json::object();
  std::string pdiff_csv = "setting,algorithm,n,min,q1,median,q3,max\n";
  json lowest = json::object();
  for (const auto& [setting, sols] : solutions) {
    for (Scenario sc : config.scenarios) {
      const std::string name(scenario_name(sc));
      BayesOptions options = config.bayes;
      options.seed = derive_seed(config.seed, fmt::format("bayes/{}/{}", setting, name));
      try {
        const auto rep = compare_scenario(sols, sc, &risk_table, options, &aw);
        const json j = rep.to_json();
        scenarios[setting][name] = j;
        emit(fmt::format("bayes_{}_{}.json", safe_name(setting), name), j.dump(2) + "\n");
      } catch (const Error& e) {
        warn(&aw, fmt::format("{} {}: {}", setting, name, e.what()));
      }
    }
    const auto diffs = lowest_risk_differences(sols, risk_table, &aw);
    for (const auto& [alg, values] : diffs) {
      if (values.empty()) continue;
      const FiveNumber f = five_number_summary(values);
      pdiff_csv += fmt::format("{},{},{},{},{},{},{},{}\n", setting, alg, f.n, number_cell(f.min),
                               number_cell(f.q1), number_cell(f.median), number_cell(f.q3),
                               number_cell(f.max));
      lowest[setting][alg] = {{"n", f.n},           {"min", f.min}, {"q1", f.q1},
                              {"median", f.median}, {"q3", f.q3},   {"max", f.max},
                              {"diffs", values}};
    }
  }
  summary["scenarios"] = scenarios;
  emit("lowest_risk_pdiff.csv", pdiff_csv);
  summary["lowest_risk_pdiff"] = lowest;

  // Datasets per variant family.
  std::map<std::string, std::size_t> counts;
  for (const auto& e : manifest.datasets) {
    for (const auto& v : e.variants) ++counts[v.spec.family()];
  }
  std::string counts_csv = "variant,n_datasets\n";
  for (const auto& [fam, n] : counts) counts_csv += fmt::format("{},{}\n", fam, n);
  emit("variant_counts.csv", counts_csv);
  summary["variant_counts"] = counts;

  summary["warnings"] = aw;
  json files = json::array();
  for (const auto& f : report.files) files.push_back(portable(f.filename()));
  files.push_back("summary.json");
  summary["files"] = files;
  write_json(summary_path, summary);
  report.files.push_back(summary_path);
  report.summary = std::move(summary);
  prefix_into(warnings, "analyze", aw);
  return report;
}

StageInputs load_stage_inputs(const RunConfig& config) {
  std::vector<std::string> missing;
  StageInputs in;
  const fs::path mpath = manifest_path(config);
  if (!fs::exists(mpath)) {
    missing = {"transform", "risk"};
  } else {
    in.manifest = VariantManifest::load(mpath);
    bool risk_done = true;
    for (const auto& e : in.manifest.datasets) {
      auto& reports = in.risks[e.name];
      for (const auto& v : e.variants) {
        const fs::path p = config.out / v.risk_path;
        if (!fs::exists(p)) {
          risk_done = false;
          break;
        }
        reports.push_back(RiskReport::from_json(read_json(p)));
      }
      if (!risk_done) break;
    }
    if (!risk_done) missing.push_back("risk");
  }
  if (!fs::exists(results_path(config))) {
    missing.push_back("evaluate");
  } else {
    in.results = parse_results(read_file(results_path(config)));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw StageError(fmt::format("missing inputs in {}; run these stages first: {}",
                                 config.out.string(), list));
  }
  return in;
}

AnalysisReport run_all(const RunConfig& config, Warnings* warnings) {
  const VariantManifest manifest = cmd_transform(config, warnings);
  const RiskTable risks = cmd_risk(config, manifest, warnings);
  const auto results = cmd_evaluate(config, manifest, warnings);
  return cmd_analyze(config, manifest, risks, results, warnings);
}

}  // namespace deid
