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

#include "deid/config.h"

#include <charconv>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "deid/io.h"

namespace deid {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Section {
 public:
  Section(std::string name, const pt::ptree& tree) : name_(std::move(name)), tree_(tree) {}

  const std::string* raw(const std::string& key) {
    seen_.insert(key);
    const auto it = tree_.find(key);
    if (it == tree_.not_found()) return nullptr;
    return &it->second.data();
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    const std::string* v = raw(key);
    if (v == nullptr) return;
    out = parse_number<T>(key, trim(*v));
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    const std::string* v = raw(key);
    if (v == nullptr) return;
    out.clear();
    for (const auto& item : split_list(*v)) out.push_back(parse_number<double>(key, item));
  }

  void text(const std::string& key, std::string& out) {
    const std::string* v = raw(key);
    if (v != nullptr) out = trim(*v);
  }

  void flag(const std::string& key, bool& out) {
    const std::string* v = raw(key);
    if (v == nullptr) return;
    const std::string s = trim(*v);
    if (s == "true" || s == "yes" || s == "1") {
      out = true;
    } else if (s == "false" || s == "no" || s == "0") {
      out = false;
    } else {
      throw ConfigError(fmt::format("{}: '{}' is not a boolean", where(key), s));
    }
  }

  // Keys under this section that no reader asked for.
  void reject_unknown(const std::string& prefix_ok = {}) const {
    for (const auto& [key, child] : tree_) {
      if (!child.empty()) continue;  // subsections handled elsewhere
      if (seen_.count(key) != 0U) continue;
      if (!prefix_ok.empty() && key.rfind(prefix_ok, 0) == 0) continue;
      throw ConfigError(fmt::format("unknown key '{}'", where(key)));
    }
  }

  std::string where(const std::string& key) const {
    return name_.empty() ? key : fmt::format("[{}] {}", name_, key);
  }

 private:
  template <typename T>
  T parse_number(const std::string& key, const std::string& s) const {
    T value{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ConfigError(fmt::format("{}: '{}' is not a number", where(key), s));
    }
    return value;
  }

  std::string name_;
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

void read_dataset(const std::string& name, const pt::ptree& tree,
                  const std::filesystem::path& base_dir, RunConfig& cfg) {
  Section s("dataset." + name, tree);
  DatasetInput in;
  in.name = name;
  std::string path;
  s.text("path", path);
  s.text("target", in.target);
  if (const std::string* qi = s.raw("qi")) in.qi = split_list(*qi);
  s.reject_unknown();
  if (path.empty()) throw ConfigError(s.where("path") + " is required");
  if (in.target.empty()) throw ConfigError(s.where("target") + " is required");
  in.path = std::filesystem::path(path);
  if (in.path.is_relative() && !base_dir.empty()) in.path = base_dir / in.path;
  cfg.datasets.push_back(std::move(in));
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  RunConfig cfg;
  Section top("", root);
  top.number("seed", cfg.seed);
  top.number("jobs", cfg.jobs);
  top.flag("force", cfg.force);
  std::string out;
  top.text("out", out);
  if (!out.empty()) {
    cfg.out = out;
    if (cfg.out.is_relative() && !base_dir.empty()) cfg.out = base_dir / cfg.out;
  }
  std::string learners;
  top.text("learners", learners);
  if (learners == "external") {
    cfg.learners = LearnerMode::kExternal;
  } else if (!learners.empty() && learners != "builtin") {
    throw ConfigError(fmt::format("learners: expected builtin or external, got '{}'", learners));
  }
  top.reject_unknown();

  static const std::set<std::string> kSections = {"transform", "grids", "linkage", "learning",
                                                  "stats"};
  for (const auto& [key, child] : root) {
    if (child.empty()) continue;
    if (key.rfind("dataset.", 0) == 0) {
      read_dataset(key.substr(8), child, base_dir, cfg);
    } else if (kSections.count(key) == 0U) {
      throw ConfigError(fmt::format("unknown section [{}]", key));
    }
  }

  if (const auto t = root.get_child_optional("transform")) {
    Section s("transform", *t);
    std::string mode;
    s.text("noise_mode", mode);
    if (mode == "variance") {
      cfg.transform.noise_mode = NoiseMode::kVariance;
    } else if (!mode.empty() && mode != "scale") {
      throw ConfigError(fmt::format("{}: expected scale or variance", s.where("noise_mode")));
    }
    s.reject_unknown();
  }

  if (const auto g = root.get_child_optional("grids")) {
    Section s("grids", *g);
    s.numbers("uniq_per", cfg.grids.uniq_per);
    s.numbers("outlier", cfg.grids.outlier);
    s.numbers("ep", cfg.grids.ep);
    s.numbers("base", cfg.grids.base);
    s.numbers("std_magnitude", cfg.grids.std_magnitude);
    s.reject_unknown();
  }

  if (const auto l = root.get_child_optional("linkage")) {
    Section s("linkage", *l);
    s.number("match_fraction", cfg.similarity.match_fraction);
    std::string blocking = "auto";
    std::size_t window = 100;
    std::string key;
    std::size_t threshold = cfg.similarity.blocking.auto_threshold;
    s.text("blocking", blocking);
    s.number("window", window);
    s.text("key", key);
    s.number("auto_threshold", threshold);
    s.flag("write_scores", cfg.similarity.write_scores);
    try {
      cfg.similarity.blocking = parse_blocking(blocking, window, key);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("[linkage] {}", e.what()));
    }
    cfg.similarity.blocking.auto_threshold = threshold;
    for (const auto& [k, child] : *l) {
      if (k.rfind("scale.", 0) != 0) continue;
      double v = 0;
      s.number(k, v);
      cfg.similarity.numeric_scale[k.substr(6)] = v;
    }
    s.reject_unknown("scale.");
  }

  if (const auto l = root.get_child_optional("learning")) {
    Section s("learning", *l);
    for (auto& [name, values] : cfg.builtin.grid) s.numbers(name, values);
    s.number("cv_folds", cfg.eval.cv_folds);
    std::string mode;
    s.text("fscore", mode);
    if (mode == "macro") {
      cfg.eval.mode = FScoreMode::kMacro;
    } else if (!mode.empty() && mode != "binary") {
      throw ConfigError(fmt::format("{}: expected binary or macro", s.where("fscore")));
    }
    std::string results;
    s.text("external_results", results);
    if (!results.empty()) cfg.external_results = results;
    if (const std::string* algs = s.raw("algorithms")) cfg.external_algorithms = split_list(*algs);
    s.reject_unknown();
  }

  if (const auto st = root.get_child_optional("stats")) {
    Section s("stats", *st);
    s.number("rope_lo", cfg.bayes.rope.lo);
    s.number("rope_hi", cfg.bayes.rope.hi);
    s.number("n_samples", cfg.bayes.n_samples);
    std::vector<double> prior;
    s.numbers("prior", prior);
    if (!prior.empty()) {
      if (prior.size() != 3) throw ConfigError("[stats] prior needs three values");
      std::copy(prior.begin(), prior.end(), cfg.bayes.prior.begin());
    }
    if (const std::string* list = s.raw("scenarios")) {
      cfg.scenarios.clear();
      for (const auto& name : split_list(*list)) {
        const auto sc = parse_scenario(name);
        if (!sc) throw ConfigError(fmt::format("[stats] unknown scenario '{}'", name));
        cfg.scenarios.push_back(*sc);
      }
    }
    s.reject_unknown();
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.parent_path());
}

void validate(const RunConfig& config) {
  if (config.datasets.empty()) throw ConfigError("config lists no [dataset.<name>] section");
  std::set<std::string> names;
  for (const auto& d : config.datasets) {
    if (d.name.empty()) throw ConfigError("dataset section with an empty name");
    if (!names.insert(d.name).second) {
      throw ConfigError(fmt::format("dataset '{}' listed twice", d.name));
    }
    if (!std::filesystem::is_regular_file(d.path)) {
      throw ConfigError(fmt::format("dataset '{}': file not found: {}", d.name, d.path.string()));
    }
  }
  for (auto t : kAllTechniques) {
    if (config.grids.grid(t).empty()) {
      throw ConfigError(fmt::format("grid for {} is empty", technique_name(t)));
    }
  }
  for (double ep : config.grids.ep) {
    if (!(ep > 0)) throw ConfigError("ep values must be positive");
  }
  for (double b : config.grids.base) {
    if (!(b > 0)) throw ConfigError("rounding base values must be positive");
  }
  for (double m : config.grids.std_magnitude) {
    if (!(m > 0)) throw ConfigError("std_magnitude values must be positive");
  }
  for (double m : config.grids.outlier) {
    if (!(m >= 0)) throw ConfigError("outlier multipliers must be non-negative");
  }
  if (!(config.similarity.match_fraction > 0 && config.similarity.match_fraction <= 1)) {
    throw ConfigError("match_fraction must be in (0, 1]");
  }
  for (const auto& [col, scale] : config.similarity.numeric_scale) {
    if (!(scale > 0)) throw ConfigError(fmt::format("scale for '{}' must be positive", col));
  }
  if (config.eval.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (!(config.bayes.rope.lo < config.bayes.rope.hi)) throw ConfigError("rope_lo must be < rope_hi");
  if (config.bayes.n_samples == 0) throw ConfigError("n_samples must be positive");
  for (double p : config.bayes.prior) {
    if (!(p >= 0)) throw ConfigError("prior concentrations must be non-negative");
  }
  for (const auto& [name, values] : config.builtin.grid) {
    if (values.empty()) throw ConfigError(fmt::format("[learning] {} grid is empty", name));
  }
  if (config.learners == LearnerMode::kExternal && config.external_algorithms.empty()) {
    throw ConfigError("[learning] algorithms is empty");
  }
}

}  // namespace deid
