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

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "advasv/harness/config.hpp"
#include "advasv/metrics.hpp"

namespace advasv::harness {

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::size_t threads = 1;
  // Progress lines; null silences them.
  std::ostream* log = nullptr;
};

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kTrain = "corpus_train.ds";
inline constexpr const char* kEval = "corpus_eval.ds";
inline constexpr const char* kTrials = "trials.txt";
inline constexpr const char* kAsv = "asv.ck";
inline constexpr const char* kRecon0 = "recon0.ck";
inline constexpr const char* kRecon1 = "recon1.ck";
inline constexpr const char* kAdvUnaware = "adv_unaware.ds";
inline constexpr const char* kAdvAware = "adv_aware.ds";
}  // namespace artifact

enum class Threat { kUnaware, kAware };
enum class Experiment { kTable1, kSweepK, kFilters, kAware };

Threat ParseThreat(const std::string& name);
std::string ToString(Threat threat);
Experiment ParseExperiment(const std::string& name);
std::string ToString(Experiment experiment);

struct TrainSummary {
  std::vector<double> asv_epoch_losses;
  recon::ReconEval recon_init;
  recon::ReconEval recon[2];
};

void GenData(const ExperimentConfig& config, const RunOptions& options);
TrainSummary Train(const ExperimentConfig& config, const RunOptions& options);
void Attack(const ExperimentConfig& config, Threat threat, const RunOptions& options);
// Writes <experiment>.csv into the output directory and returns the report.
metrics::EvalReport Evaluate(const ExperimentConfig& config, Experiment experiment,
                             const RunOptions& options);

// Condition names used in the reports.
std::string CleanCondition(std::size_t k);
std::string AdvCondition(std::size_t k);

// Index into config.k_list with the lowest adversarial EER among K >= 1;
// ties go to the smaller K.
std::size_t BestK(const ExperimentConfig& config, const metrics::EvalReport& sweep);

// Loaded artifacts, each checked against the expected config hash.
struct Workspace {
  std::vector<synth::Utterance> train;
  std::vector<synth::Utterance> eval;
  synth::TrialSet trials;
  std::shared_ptr<const asv::EmbeddingNet> asv;
  std::shared_ptr<const recon::ReconNet> recon0, recon1;
};

Workspace LoadCorpus(const ExperimentConfig& config, const RunOptions& options);
void LoadModels(const ExperimentConfig& config, const RunOptions& options, Workspace& ws);
// Per-trial adversarial test features; the epsilon ball is re-checked.
std::vector<FeatureMatrix> LoadAdversarial(const ExperimentConfig& config, Threat threat,
                                           const RunOptions& options, const Workspace& ws);

}  // namespace advasv::harness
