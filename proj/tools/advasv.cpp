// Copyright 2026  The advasv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// advasv: command-line driver for the adversarial-defense experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>

#include "advasv/error.hpp"
#include "advasv/harness/config.hpp"
#include "advasv/harness/pipeline.hpp"
#include "advasv/harness/selfcheck.hpp"

namespace h = advasv::harness;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitInternal = 2;

h::ExperimentConfig LoadConfig(const std::string& path, std::optional<std::uint64_t> seed) {
  h::ConfigFile file = path.empty() ? h::ConfigFile{} : h::ConfigFile::Load(path);
  if (seed) file.Set("run.seed", std::to_string(*seed));
  return h::ExperimentConfig::FromFile(file);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial attacks and cascaded-purifier defenses for a toy speaker verifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::size_t threads = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment config (key = value lines)");
  app.add_option("--seed", seed, "Master seed; overrides run.seed");
  app.add_option("--out", out_dir, "Artifact directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for trial-level work")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus and trial list");
  auto* train = app.add_subcommand("train", "Train the ASV net and the two recon nets");
  auto* atk = app.add_subcommand("attack", "Craft adversarial test utterances with BIM");
  std::string threat = "unaware";
  atk->add_option("--threat", threat, "unaware | aware")
      ->check(CLI::IsMember({"unaware", "aware"}))
      ->capture_default_str();
  auto* eval = app.add_subcommand("evaluate", "Score trials and write a report CSV");
  std::string experiment;
  eval->add_option("--experiment", experiment, "table1 | sweep_k | filters | aware")
      ->required()
      ->check(CLI::IsMember({"table1", "sweep_k", "filters", "aware"}));
  auto* self = app.add_subcommand("selfcheck", "Gradient, metric and filter self-tests");
  bool corrupt = false;
  self->add_flag("--corrupt-gradient", corrupt, "Include a deliberately wrong backward rule");
  auto* show = app.add_subcommand("show-config", "Print the effective config and its hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    h::RunOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.log = quiet ? nullptr : &std::cerr;

    if (self->parsed()) {
      const auto results = h::RunSelfCheck({.corrupt_gradient = corrupt});
      std::size_t failed = 0;
      for (const auto& r : results) {
        std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        failed += !r.passed;
      }
      std::printf("%zu of %zu checks passed\n", results.size() - failed, results.size());
      return failed == 0 ? 0 : kExitValidation;
    }

    const h::ExperimentConfig config = LoadConfig(config_path, seed);
    if (show->parsed()) {
      std::cout << config.ToFile().Canonical() << "# hash " << h::HashHex(config.Hash()) << "\n";
    } else if (gen->parsed()) {
      h::GenData(config, opts);
    } else if (train->parsed()) {
      h::Train(config, opts);
    } else if (atk->parsed()) {
      h::Attack(config, h::ParseThreat(threat), opts);
    } else if (eval->parsed()) {
      const auto report = h::Evaluate(config, h::ParseExperiment(experiment), opts);
      std::cout << report.ToCsv();
    }
    return 0;
  } catch (const advasv::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
