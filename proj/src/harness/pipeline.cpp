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

#include "advasv/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "advasv/error.hpp"
#include "advasv/parallel.hpp"
#include "advasv/rng.hpp"

namespace advasv::harness {

namespace fs = std::filesystem;

namespace {

void Log(const RunOptions& o, const std::string& line) {
  if (o.log) *o.log << line << std::endl;
}

std::string Fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

fs::path Require(const RunOptions& o, const char* name, const char* producer) {
  fs::path p = o.out_dir / name;
  if (!fs::exists(p)) {
    throw ValidationError("missing " + p.string() + "; run `advasv " + producer +
                          "` with the same config first");
  }
  return p;
}

void CheckHash(const fs::path& path, std::uint64_t found, std::uint64_t expected) {
  if (found != expected) {
    throw ValidationError(path.string() + " was produced with config hash " + HashHex(found) +
                          " but the current config hashes to " + HashHex(expected) +
                          "; regenerate it");
  }
}

std::vector<FeatureMatrix> Features(const std::vector<synth::Utterance>& utts) {
  std::vector<FeatureMatrix> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(u.features);
  return out;
}

void ApplyAll(const Stage& stage, std::vector<FeatureMatrix>& xs, std::size_t threads) {
  ParallelFor(xs.size(), threads, [&](std::size_t i) { xs[i] = stage.Apply(xs[i]); });
}

// Scores trials with enrollment taken from `enroll_pool` (indexed like the
// eval split) and one test matrix per trial.
metrics::ScoredTrials ScoreTrials(const Workspace& ws,
                                  const std::vector<FeatureMatrix>& enroll_pool,
                                  const std::vector<FeatureMatrix>& per_trial_test,
                                  std::size_t threads) {
  std::vector<synth::Utterance> pool = ws.eval;
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].features = enroll_pool[i];
  asv::AsvPipeline pipe{ws.asv, {}, false};
  return asv::EvalTrials(pipe, pool, ws.trials, per_trial_test, {threads});
}

std::vector<FeatureMatrix> TestsOf(const Workspace& ws, const std::vector<FeatureMatrix>& pool) {
  std::vector<FeatureMatrix> out;
  out.reserve(ws.trials.size());
  for (const auto& t : ws.trials.trials) out.push_back(pool[t.test]);
  return out;
}

// Clean and adversarial scores for each K of `ks` (ascending order not
// required), purifying incrementally with one recon application per level.
std::vector<std::pair<metrics::ScoredTrials, metrics::ScoredTrials>> CascadeSweep(
    const ExperimentConfig& config, const Workspace& ws,
    const std::shared_ptr<const recon::ReconNet>& net, const std::vector<FeatureMatrix>& adv,
    const std::vector<std::size_t>& ks, bool with_clean, const RunOptions& o) {
  const std::vector<FeatureMatrix> original = Features(ws.eval);
  std::vector<FeatureMatrix> pool = original;
  std::vector<FeatureMatrix> cur_adv = adv;
  const recon::Cascade once(net, 1);
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  std::vector<std::pair<metrics::ScoredTrials, metrics::ScoredTrials>> out(ks.size());
  for (std::size_t k = 0;; ++k) {
    const auto& enroll = config.purify_enroll ? pool : original;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] != k) continue;
      if (with_clean) out[i].first = ScoreTrials(ws, enroll, TestsOf(ws, pool), o.threads);
      out[i].second = ScoreTrials(ws, enroll, cur_adv, o.threads);
      Log(o, "  K=" + std::to_string(k) +
                 (with_clean ? " clean EER " + Fixed(metrics::Eer(out[i].first), 2) : "") +
                 " adv EER " + Fixed(metrics::Eer(out[i].second), 2));
    }
    if (k == k_max) break;
    ApplyAll(once, pool, o.threads);
    ApplyAll(once, cur_adv, o.threads);
  }
  return out;
}

metrics::ScoredTrials ScoreWithStage(const ExperimentConfig& config, const Workspace& ws,
                                     const Stage& stage, const std::vector<FeatureMatrix>& tests,
                                     const RunOptions& o) {
  std::vector<FeatureMatrix> enroll = Features(ws.eval);
  if (config.purify_enroll) ApplyAll(stage, enroll, o.threads);
  std::vector<FeatureMatrix> purified = tests;
  ApplyAll(stage, purified, o.threads);
  return ScoreTrials(ws, enroll, purified, o.threads);
}

}  // namespace

Threat ParseThreat(const std::string& name) {
  if (name == "unaware") return Threat::kUnaware;
  if (name == "aware") return Threat::kAware;
  throw ValidationError("unknown threat model '" + name + "' (expected unaware or aware)");
}

std::string ToString(Threat threat) { return threat == Threat::kAware ? "aware" : "unaware"; }

Experiment ParseExperiment(const std::string& name) {
  if (name == "table1") return Experiment::kTable1;
  if (name == "sweep_k") return Experiment::kSweepK;
  if (name == "filters") return Experiment::kFilters;
  if (name == "aware") return Experiment::kAware;
  throw ValidationError("unknown experiment '" + name +
                        "' (expected table1, sweep_k, filters or aware)");
}

std::string ToString(Experiment e) {
  switch (e) {
    case Experiment::kTable1: return "table1";
    case Experiment::kSweepK: return "sweep_k";
    case Experiment::kFilters: return "filters";
    case Experiment::kAware: return "aware";
  }
  return "unknown";
}

std::string CleanCondition(std::size_t k) { return "clean_k" + std::to_string(k); }
std::string AdvCondition(std::size_t k) { return "adv_k" + std::to_string(k); }

std::size_t BestK(const ExperimentConfig& config, const metrics::EvalReport& sweep) {
  std::size_t best = config.k_list.size();
  for (std::size_t i = 0; i < config.k_list.size(); ++i) {
    const std::size_t k = config.k_list[i];
    if (k == 0) continue;
    if (best == config.k_list.size()) {
      best = i;
      continue;
    }
    const double e = sweep.Row(AdvCondition(k)).eer_percent;
    const double b = sweep.Row(AdvCondition(config.k_list[best])).eer_percent;
    if (e < b || (e == b && k < config.k_list[best])) best = i;
  }
  if (best == config.k_list.size()) {
    throw ValidationError("defense.k_list has no K >= 1 to choose a best cascade from");
  }
  return best;
}

void GenData(const ExperimentConfig& config, const RunOptions& o) {
  config.Validate();
  const std::uint64_t hash = config.Hash();
  synth::CorpusConfig cc = config.corpus;
  cc.seed = config.CorpusSeed();
  synth::Corpus corpus = synth::GenerateCorpus(cc);
  const synth::TrialSet trials =
      synth::MakeTrials(corpus.eval, config.n_target, config.n_nontarget, config.TrialSeed());
  synth::SaveDataset(o.out_dir / artifact::kTrain, {0, hash, corpus.train});
  synth::SaveDataset(o.out_dir / artifact::kEval, {0, hash, corpus.eval});
  synth::SaveTrials(o.out_dir / artifact::kTrials, trials, hash);
  const auto [intra, inter] = synth::IntraInterDistances(corpus.eval);
  Log(o, "gen-data: " + std::to_string(corpus.train.size()) + " train / " +
             std::to_string(corpus.eval.size()) + " eval utterances, " +
             std::to_string(trials.size()) + " trials (" + std::to_string(trials.CountTargets()) +
             " target); intra/inter distance " + Fixed(intra) + " / " + Fixed(inter) +
             "; config " + HashHex(hash));
}

Workspace LoadCorpus(const ExperimentConfig& config, const RunOptions& o) {
  const std::uint64_t hash = config.Hash();
  Workspace ws;
  for (auto [name, dst] : {std::pair{artifact::kTrain, &ws.train}, {artifact::kEval, &ws.eval}}) {
    const fs::path p = Require(o, name, "gen-data");
    synth::Dataset ds = synth::LoadDataset(p);
    CheckHash(p, ds.config_hash, hash);
    *dst = std::move(ds.utterances);
  }
  const fs::path tp = Require(o, artifact::kTrials, "gen-data");
  std::uint64_t trial_hash = 0;
  ws.trials = synth::LoadTrials(tp, &trial_hash);
  CheckHash(tp, trial_hash, hash);
  for (const auto& t : ws.trials.trials) {
    if (t.enroll >= ws.eval.size() || t.test >= ws.eval.size()) {
      throw ValidationError(tp.string() + ": trial references utterance outside the eval split");
    }
  }
  return ws;
}

void LoadModels(const ExperimentConfig& config, const RunOptions& o, Workspace& ws) {
  const std::uint64_t hash = config.Hash();
  auto load = [&](const char* name) {
    const fs::path p = Require(o, name, "train");
    Checkpoint ck = Checkpoint::Load(p);
    CheckHash(p, ck.config_hash, hash);
    return ck;
  };
  ws.asv = std::make_shared<const asv::EmbeddingNet>(
      asv::EmbeddingNet::FromCheckpoint(load(artifact::kAsv)));
  ws.recon0 = std::make_shared<const recon::ReconNet>(
      recon::ReconNet::FromCheckpoint(load(artifact::kRecon0)));
  ws.recon1 = std::make_shared<const recon::ReconNet>(
      recon::ReconNet::FromCheckpoint(load(artifact::kRecon1)));
}

TrainSummary Train(const ExperimentConfig& config, const RunOptions& o) {
  config.Validate();
  const std::uint64_t hash = config.Hash();
  Workspace ws = LoadCorpus(config, o);
  TrainSummary summary;

  Log(o, "train: asv (" + std::to_string(config.asv_train.epochs) + " epochs)");
  asv::TrainResult asv_result =
      asv::TrainAsv(ws.train, config.asv_net, config.asv_train, config.AsvSeed());
  summary.asv_epoch_losses = asv_result.epoch_losses;
  Log(o, "  loss " + Fixed(asv_result.epoch_losses.front(), 4) + " -> " +
             Fixed(asv_result.epoch_losses.back(), 4));
  asv_result.net.ToCheckpoint(hash).Save(o.out_dir / artifact::kAsv);

  const std::uint64_t eval_seed = DeriveSeed(config.seed, 0x4556414cULL);
  // The untrained starting point of recon0.
  summary.recon_init = recon::EvaluateRecon(
      recon::ReconNet(config.recon_net, DeriveSeed(config.ReconSeed(0), 0)), ws.eval,
      config.recon_train.policy, eval_seed);
  std::unique_ptr<recon::ReconNet> nets[2];
  for (std::size_t i = 0; i < 2; ++i) {
    Log(o, "train: recon" + std::to_string(i) + " (" +
               std::to_string(config.recon_train.steps) + " steps)");
    recon::PretrainResult r = recon::PretrainRecon(ws.train, config.recon_net,
                                                   config.recon_train, config.ReconSeed(i));
    summary.recon[i] =
        recon::EvaluateRecon(r.net, ws.eval, config.recon_train.policy, eval_seed);
    Log(o, "  held-out L1 " + Fixed(summary.recon[i].altered_l1) + ", clean L1 " +
               Fixed(summary.recon[i].clean_l1) + ", masked L1 " +
               Fixed(summary.recon[i].masked_l1) + " (zero fill " +
               Fixed(summary.recon[i].masked_zero_l1) + ")");
    r.net.ToCheckpoint(hash).Save(o.out_dir / (i == 0 ? artifact::kRecon0 : artifact::kRecon1));
    nets[i] = std::make_unique<recon::ReconNet>(std::move(r.net));
  }
  if (*nets[0] == *nets[1]) {
    throw NumericalError("train: recon0 and recon1 came out identical");
  }
  return summary;
}

void Attack(const ExperimentConfig& config, Threat threat, const RunOptions& o) {
  config.Validate();
  const std::uint64_t hash = config.Hash();
  Workspace ws = LoadCorpus(config, o);
  LoadModels(config, o, ws);
  StageChain substitute;
  if (threat == Threat::kAware) {
    substitute.push_back(std::make_shared<recon::Cascade>(ws.recon1, 1, "recon1"));
  }
  const attack::VictimPipeline victim = attack::MakeVictim(ws.asv, substitute);
  Log(o, "attack: " + ToString(threat) + " threat, victim [" + victim.description() + "], " +
             std::to_string(ws.trials.size()) + " trials");
  const std::vector<FeatureMatrix> adv =
      attack::AttackTrialSet(victim, ws.eval, ws.trials, config.attack, o.threads);
  synth::Dataset ds;
  ds.flags = synth::Dataset::kFlagAdversarial;
  if (threat == Threat::kAware) ds.flags |= synth::Dataset::kFlagAwareThreat;
  ds.config_hash = hash;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    const synth::Utterance& src = ws.eval[ws.trials.trials[i].test];
    ds.utterances.push_back({src.speaker_id, adv[i], 0});
  }
  synth::SaveDataset(o.out_dir / (threat == Threat::kAware ? artifact::kAdvAware
                                                             : artifact::kAdvUnaware),
                     ds);
}

std::vector<FeatureMatrix> LoadAdversarial(const ExperimentConfig& config, Threat threat,
                                           const RunOptions& o, const Workspace& ws) {
  const bool aware = threat == Threat::kAware;
  const fs::path p = Require(o, aware ? artifact::kAdvAware : artifact::kAdvUnaware,
                             aware ? "attack --threat aware" : "attack --threat unaware");
  synth::Dataset ds = synth::LoadDataset(p);
  CheckHash(p, ds.config_hash, config.Hash());
  const bool flagged_aware = (ds.flags & synth::Dataset::kFlagAwareThreat) != 0;
  if (!ds.adversarial() || flagged_aware != aware) {
    throw ValidationError(p.string() + ": header flags do not mark an " + ToString(threat) +
                          " adversarial set");
  }
  if (ds.utterances.size() != ws.trials.size()) {
    throw ValidationError(p.string() + ": holds " + std::to_string(ds.utterances.size()) +
                          " utterances for " + std::to_string(ws.trials.size()) + " trials");
  }
  const double bound = config.attack.epsilon + 1e-12;
  std::vector<FeatureMatrix> out;
  out.reserve(ds.utterances.size());
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const FeatureMatrix& clean = ws.eval[ws.trials.trials[i].test].features;
    const FeatureMatrix& adv = ds.utterances[i].features;
    if (adv.frames() != clean.frames() || adv.channels() != clean.channels() ||
        MaxAbsDiff(adv, clean) > bound) {
      throw ValidationError(p.string() + ": utterance " + std::to_string(i) +
                            " leaves the epsilon ball around its clean test utterance");
    }
    out.push_back(adv);
  }
  return out;
}

metrics::EvalReport Evaluate(const ExperimentConfig& config, Experiment experiment,
                             const RunOptions& o) {
  config.Validate();
  const std::uint64_t hash = config.Hash();
  Workspace ws = LoadCorpus(config, o);
  LoadModels(config, o, ws);
  Log(o, "evaluate: " + ToString(experiment));
  std::vector<metrics::NamedScores> rows;
  const std::vector<FeatureMatrix> original = Features(ws.eval);

  switch (experiment) {
    case Experiment::kTable1: {
      const auto adv = LoadAdversarial(config, Threat::kUnaware, o, ws);
      rows.push_back({"clean", ScoreTrials(ws, original, TestsOf(ws, original), o.threads)});
      rows.push_back({"adversarial", ScoreTrials(ws, original, adv, o.threads)});
      break;
    }
    case Experiment::kSweepK: {
      const auto adv = LoadAdversarial(config, Threat::kUnaware, o, ws);
      auto sweep = CascadeSweep(config, ws, ws.recon0, adv, config.k_list, true, o);
      for (std::size_t i = 0; i < config.k_list.size(); ++i) {
        rows.push_back({CleanCondition(config.k_list[i]), std::move(sweep[i].first)});
        rows.push_back({AdvCondition(config.k_list[i]), std::move(sweep[i].second)});
      }
      break;
    }
    case Experiment::kFilters: {
      const auto adv = LoadAdversarial(config, Threat::kUnaware, o, ws);
      std::vector<std::size_t> ks = config.k_list;
      if (std::find(ks.begin(), ks.end(), 0) == ks.end()) ks.push_back(0);
      auto sweep = CascadeSweep(config, ws, ws.recon0, adv, ks, true, o);
      metrics::EvalReport sweep_report;
      for (std::size_t i = 0; i < ks.size(); ++i) {
        sweep_report.rows.push_back(
            {AdvCondition(ks[i]), ks.size(), metrics::Eer(sweep[i].second), 0.0, hash, 0});
      }
      const std::size_t best_k = config.k_list[BestK(config, sweep_report)];
      const auto at = [&](std::size_t k) {
        return static_cast<std::size_t>(std::find(ks.begin(), ks.end(), k) - ks.begin());
      };
      rows.push_back({"clean_none", sweep[at(0)].first});
      rows.push_back({"adv_none", sweep[at(0)].second});
      const std::string cascade = "cascade" + std::to_string(best_k);
      rows.push_back({"clean_" + cascade, sweep[at(best_k)].first});
      rows.push_back({"adv_" + cascade, sweep[at(best_k)].second});
      for (const auto& spec : config.filters) {
        const filters::FilterStage stage(spec);
        rows.push_back({"clean_" + stage.name(),
                        ScoreWithStage(config, ws, stage, TestsOf(ws, original), o)});
        rows.push_back({"adv_" + stage.name(), ScoreWithStage(config, ws, stage, adv, o)});
        Log(o, "  " + stage.name() + " clean EER " +
                   Fixed(metrics::Eer(rows[rows.size() - 2].trials), 2) + " adv EER " +
                   Fixed(metrics::Eer(rows.back().trials), 2));
      }
      break;
    }
    case Experiment::kAware: {
      const auto adv = LoadAdversarial(config, Threat::kAware, o, ws);
      auto sweep = CascadeSweep(config, ws, ws.recon0, adv, config.aware_k_list, false, o);
      for (std::size_t i = 0; i < config.aware_k_list.size(); ++i) {
        rows.push_back({"aware_k" + std::to_string(config.aware_k_list[i]),
                        std::move(sweep[i].second)});
      }
      break;
    }
  }
  metrics::EvalReport report = metrics::Report(rows, hash, config.seed);
  report.Save(o.out_dir / (ToString(experiment) + ".csv"));
  for (const auto& r : report.rows) {
    Log(o, "  " + r.condition + ": EER " + Fixed(r.eer_percent, 2) + "%, minDCF " +
               Fixed(r.min_dcf, 4));
  }
  return report;
}

}  // namespace advasv::harness
