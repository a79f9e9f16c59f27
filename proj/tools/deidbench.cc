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

// deidbench: de-identification benchmark driver.
//
//   deidbench transform --config run.ini
//   deidbench all --config run.ini --seed 7 --jobs 4
//   deidbench synth --out data/ --count 5
//
// Exit status: 0 success, 1 configuration error, 2 stage failure.

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <tbb/task_arena.h>

#include "deid/config.h"
#include "deid/pipeline.h"
#include "deid/synthetic.h"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kStageError = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool force = false;
  std::optional<std::string> learners;
  std::optional<std::size_t> jobs;
};

deid::RunConfig resolve(const Overrides& o) {
  deid::RunConfig cfg = deid::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.force) cfg.force = true;
  if (o.learners) {
    cfg.learners = *o.learners == "external" ? deid::LearnerMode::kExternal
                                             : deid::LearnerMode::kBuiltin;
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  deid::validate(cfg);
  return cfg;
}

// Repeated warnings are printed once with a count, in first-seen order.
void report(const deid::Warnings& warnings) {
  std::vector<std::pair<std::string, std::size_t>> unique;
  std::map<std::string, std::size_t> index;
  for (const auto& w : warnings) {
    auto [it, fresh] = index.emplace(w, unique.size());
    if (fresh) unique.emplace_back(w, 0);
    ++unique[it->second].second;
  }
  for (const auto& [w, n] : unique) {
    if (n == 1) {
      fmt::print(stderr, "warning: {}\n", w);
    } else {
      fmt::print(stderr, "warning: {} (x{})\n", w, n);
    }
  }
}

int run_stage(const std::string& stage, const Overrides& o) {
  deid::RunConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const deid::Error& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  }

  const int threads = cfg.jobs == 0 ? tbb::task_arena::automatic : static_cast<int>(cfg.jobs);
  tbb::task_arena arena(threads);
  deid::Warnings warnings;
  int status = kOk;
  arena.execute([&] {
    try {
      if (stage == "transform") {
        const auto m = deid::cmd_transform(cfg, &warnings);
        std::size_t n = 0;
        for (const auto& d : m.datasets) n += d.variants.size();
        fmt::print("transform: {} datasets, {} variants -> {}\n", m.datasets.size(), n,
                   deid::manifest_path(cfg).string());
      } else if (stage == "risk") {
        if (!std::filesystem::exists(deid::manifest_path(cfg))) {
          throw deid::StageError("no manifest; run the transform stage first");
        }
        const auto m = deid::VariantManifest::load(deid::manifest_path(cfg));
        const auto risks = deid::cmd_risk(cfg, m, &warnings);
        for (const auto& [ds, reports] : risks) {
          for (const auto& r : reports) fmt::print("risk: {}/{} {:.4f}\n", ds, r.variant, r.risk);
        }
      } else if (stage == "evaluate") {
        if (!std::filesystem::exists(deid::manifest_path(cfg))) {
          throw deid::StageError("no manifest; run the transform stage first");
        }
        const auto m = deid::VariantManifest::load(deid::manifest_path(cfg));
        const auto results = deid::cmd_evaluate(cfg, m, &warnings);
        fmt::print("evaluate: {} result groups -> {}\n", results.size(),
                   deid::results_path(cfg).string());
      } else if (stage == "analyze") {
        const auto in = deid::load_stage_inputs(cfg);
        const auto rep = deid::cmd_analyze(cfg, in.manifest, in.risks, in.results, &warnings);
        for (const auto& f : rep.files) fmt::print("analyze: {}\n", f.string());
      } else {
        const auto rep = deid::run_all(cfg, &warnings);
        for (const auto& f : rep.files) fmt::print("report: {}\n", f.string());
      }
    } catch (const deid::ConfigError& e) {
      fmt::print(stderr, "config error: {}\n", e.what());
      status = kConfigError;
    } catch (const std::exception& e) {
      fmt::print(stderr, "{} failed: {}\n", stage, e.what());
      status = kStageError;
    }
  });
  report(warnings);
  return status;
}

int run_synth(const std::string& out, std::size_t count, std::size_t rows, std::uint64_t seed) {
  try {
    for (std::size_t i = 0; i < count; ++i) {
      deid::SyntheticSpec spec;
      spec.rows = rows;
      spec.seed = deid::derive_seed(seed, i);
      spec.nominal_features = i % 2;
      spec.outlier_rate = 0.02;
      spec.float_decimals = 3;
      const std::string name = fmt::format("synth{}", i);
      const auto path = std::filesystem::path(out) / (name + ".csv");
      deid::write_csv(deid::make_synthetic(name, spec), path);
      fmt::print("{}\n", path.string());
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "synth failed: {}\n", e.what());
    return kStageError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"De-identification benchmark: transform, risk, evaluate, analyze"};
  app.require_subcommand(1);

  Overrides o;
  std::string stage;
  for (const char* name : {"transform", "risk", "evaluate", "analyze", "all"}) {
    auto* sub = app.add_subcommand(name, fmt::format("run the {} stage", name));
    if (std::string(name) == "all") sub->description("run every stage in order");
    sub->add_option("--config", o.config, "run configuration file")->required();
    sub->add_option("--seed", o.seed, "override the master seed");
    sub->add_option("--out", o.out, "override the output directory");
    sub->add_flag("--force", o.force, "recompute artifacts that already exist");
    sub->add_option("--learners", o.learners, "builtin or external")
        ->check(CLI::IsMember({"builtin", "external"}));
    sub->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
    sub->callback([&stage, name] { stage = name; });
  }

  std::string synth_out = ".";
  std::size_t synth_count = 5;
  std::size_t synth_rows = 1000;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write synthetic CSV datasets");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--count", synth_count, "number of datasets");
  synth->add_option("--rows", synth_rows, "rows per dataset");
  synth->add_option("--seed", synth_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (synth->parsed()) return run_synth(synth_out, synth_count, synth_rows, synth_seed);
  return run_stage(stage, o);
}
