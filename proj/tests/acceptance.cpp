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

// Acceptance run: the default experiment end to end plus the property
// suites, one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "advasv/binary_io.hpp"
#include "advasv/filters.hpp"
#include "advasv/harness/config.hpp"
#include "advasv/harness/pipeline.hpp"
#include "advasv/harness/selfcheck.hpp"
#include "advasv/metrics.hpp"
#include "advasv/rng.hpp"

namespace fs = std::filesystem;
namespace h = advasv::harness;
using advasv::FeatureMatrix;

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void Report(int id, bool pass, const std::string& detail) {
  lines.push_back({id, pass, detail});
  std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

struct PipelineRun {
  h::TrainSummary summary;
  double gen_s = 0.0, train_s = 0.0, attack_s = 0.0;
  double table1_s = 0.0, sweep_s = 0.0, filters_s = 0.0, aware_s = 0.0;
};

PipelineRun RunPipeline(const h::ExperimentConfig& cfg, const h::RunOptions& o) {
  PipelineRun r;
  fs::remove_all(o.out_dir);
  fs::create_directories(o.out_dir);
  auto t = Clock::now();
  h::GenData(cfg, o);
  r.gen_s = Since(t);
  t = Clock::now();
  r.summary = h::Train(cfg, o);
  r.train_s = Since(t);
  t = Clock::now();
  h::Attack(cfg, h::Threat::kUnaware, o);
  h::Attack(cfg, h::Threat::kAware, o);
  r.attack_s = Since(t);
  const auto timed = [&](h::Experiment e, double& s) {
    t = Clock::now();
    h::Evaluate(cfg, e, o);
    s = Since(t);
  };
  timed(h::Experiment::kTable1, r.table1_s);
  timed(h::Experiment::kSweepK, r.sweep_s);
  timed(h::Experiment::kFilters, r.filters_s);
  timed(h::Experiment::kAware, r.aware_s);
  return r;
}

void Criterion1(const advasv::metrics::EvalReport& t1, const PipelineRun& run) {
  const auto& clean = t1.Row("clean");
  const auto& adv = t1.Row("adversarial");
  const bool pass = clean.eer_percent <= 10.0 && adv.eer_percent >= 50.0 &&
                    clean.min_dcf < adv.min_dcf && adv.min_dcf >= 0.9;
  Report(1, pass,
         Fmt("clean EER %.2f%% minDCF %.3f; adversarial EER %.2f%% minDCF %.3f "
             "(attack %.1fs, table1 %.1fs)",
             clean.eer_percent, clean.min_dcf, adv.eer_percent, adv.min_dcf, run.attack_s,
             run.table1_s));
}

void Criterion2(const h::ExperimentConfig& cfg, const advasv::metrics::EvalReport& sweep,
                const PipelineRun& run) {
  const std::size_t best = cfg.k_list[h::BestK(cfg, sweep)];
  const double adv0 = sweep.Row(h::AdvCondition(0)).eer_percent;
  const double clean0 = sweep.Row(h::CleanCondition(0)).eer_percent;
  const double adv_best = sweep.Row(h::AdvCondition(best)).eer_percent;
  const double clean_best = sweep.Row(h::CleanCondition(best)).eer_percent;
  std::string curve;
  for (std::size_t k : cfg.k_list) {
    curve += Fmt(" K%zu=%.1f/%.1f", k, sweep.Row(h::CleanCondition(k)).eer_percent,
                 sweep.Row(h::AdvCondition(k)).eer_percent);
  }
  const bool pass = adv_best <= 0.6 * adv0 && clean_best - clean0 <= 15.0 &&
                    run.sweep_s <= 600.0;
  Report(2, pass,
         Fmt("best K=%zu adversarial EER %.2f%% vs %.2f%% at K=0 (bound %.2f%%); clean "
             "%.2f%% vs %.2f%%; clean/adv:%s (%.1fs)",
             best, adv_best, adv0, 0.6 * adv0, clean_best, clean0, curve.c_str(), run.sweep_s));
}

void Criterion3(const h::ExperimentConfig& cfg, const advasv::metrics::EvalReport& f) {
  std::string cascade;
  for (const auto& r : f.rows) {
    if (r.condition.rfind("adv_cascade", 0) == 0) cascade = r.condition.substr(4);
  }
  const double adv_none = f.Row("adv_none").eer_percent;
  const double c_clean = f.Row("clean_" + cascade).eer_percent;
  const double c_adv = f.Row("adv_" + cascade).eer_percent;
  bool pass = true;
  std::string detail = Fmt("undefended adv %.2f%%; %s clean %.2f%% adv %.2f%%", adv_none,
                           cascade.c_str(), c_clean, c_adv);
  for (const auto& spec : cfg.filters) {
    const std::string name = advasv::filters::FilterStage(spec).name();
    const double fc = f.Row("clean_" + name).eer_percent;
    const double fa = f.Row("adv_" + name).eer_percent;
    const bool reduces = fa <= 0.75 * adv_none;
    const bool beaten = c_clean <= fc && c_adv <= fa;
    pass = pass && reduces && beaten;
    detail += Fmt("; %s clean %.2f%% adv %.2f%% (%s, %s)", name.c_str(), fc, fa,
                  reduces ? "reduces >=25%" : "reduces <25%",
                  beaten ? "cascade better" : "cascade not better");
  }
  Report(3, pass, detail);
}

void Criterion4(const advasv::metrics::EvalReport& a) {
  const auto eer = [&](int k) { return a.Row("aware_k" + std::to_string(k)).eer_percent; };
  int inversions = 0;
  bool small = true;
  for (int k = 2; k <= 3; ++k) {
    const double rise = eer(k) - eer(k - 1);
    if (rise > 0.0) {
      ++inversions;
      small = small && rise <= 1.0;
    }
  }
  const bool trend = inversions == 0 || (inversions == 1 && small);
  const bool drop = eer(3) <= eer(0) - 5.0;
  Report(4, trend && drop,
         Fmt("aware EER K0 %.2f%% K1 %.2f%% K2 %.2f%% K3 %.2f%% (%s; K3 %s K0-5)", eer(0),
             eer(1), eer(2), eer(3), trend ? "nonincreasing over 1..3" : "not nonincreasing",
             drop ? "<=" : ">"));
}

void Criterion5() {
  const auto t = Clock::now();
  double worst = 0.0;
  std::string worst_case;
  std::uint64_t worst_seed = 0;
  const auto cases = h::GradCases();
  for (const auto& c : cases) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto r = advasv::numcore::GradCheck(c.function(s), c.point(s),
                                                {.h = 1e-4, .max_coords = c.max_coords, .seed = s});
      if (r.max_relative_error > worst) {
        worst = r.max_relative_error;
        worst_case = c.name;
        worst_seed = s;
      }
    }
  }
  const double secs = Since(t);
  Report(5, worst < 1e-5 && secs < 60.0,
         Fmt("%zu cases x 100 seeds, worst relative error %.3g (%s, seed %llu) in %.1fs",
             cases.size(), worst, worst_case.c_str(),
             static_cast<unsigned long long>(worst_seed), secs));
}

void Criterion6() {
  const auto t = Clock::now();
  std::size_t mismatches = 0, tie_sets = 0;
  advasv::Rng sizes(0x6d657472);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t n = 2 + sizes.Below(1999);
    const bool ties = s % 3 == 0;
    tie_sets += ties;
    const auto st = h::RandomScoreSet(n, ties, s);
    if (advasv::metrics::Eer(st) != h::BruteForceEer(st)) ++mismatches;
    if (advasv::metrics::MinDcf(st) != h::BruteForceMinDcf(st)) ++mismatches;
  }
  Report(6, mismatches == 0,
         Fmt("1000 sets of 2..2000 scores (%zu tie-heavy), %zu mismatches (%.1fs)", tie_sets,
             mismatches, Since(t)));
}

void Criterion7(const h::ExperimentConfig& cfg, const h::RunOptions& a, const h::RunOptions& b,
                bool rerun) {
  h::Workspace ws = h::LoadCorpus(cfg, a);
  double worst = 0.0;
  std::size_t count = 0;
  const auto tests = [&](h::Threat threat) {
    const auto adv = h::LoadAdversarial(cfg, threat, a, ws);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      worst = std::max(worst, advasv::MaxAbsDiff(adv[i], ws.eval[ws.trials.trials[i].test].features));
      ++count;
    }
  };
  tests(h::Threat::kUnaware);
  tests(h::Threat::kAware);
  const bool bound = worst <= cfg.attack.epsilon + 1e-12;

  std::size_t files = 0, differing = 0;
  double secs = 0.0;
  if (rerun) {
    const auto t = Clock::now();
    RunPipeline(cfg, b);
    secs = Since(t);
    for (const auto& entry : fs::directory_iterator(a.out_dir)) {
      ++files;
      const fs::path other = b.out_dir / entry.path().filename();
      if (!fs::exists(other) ||
          advasv::io::ReadFile(entry.path()) != advasv::io::ReadFile(other)) {
        ++differing;
      }
    }
  }
  const std::string det =
      rerun ? Fmt("rerun with %zu threads: %zu of %zu files byte-identical (%.1fs)", b.threads,
                  files - differing, files, secs)
            : std::string("rerun skipped");
  Report(7, bound && rerun && differing == 0 && files > 0,
         Fmt("%zu stored adversarial utterances, max |adv - clean| %.17g (eps %.3g); %s", count,
             worst, cfg.attack.epsilon, det.c_str()));
}

void Criterion8(const h::ExperimentConfig& cfg, const PipelineRun& run) {
  double worst_sum = 0.0;
  for (std::size_t w = 1; w <= 21; w += 2) {
    for (double sigma : {0.25, 0.5, 1.0, 2.0, 5.0}) {
      double sum = 0.0;
      for (double v : advasv::filters::GaussianKernel(w, sigma)) sum += v;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  bool constants = true;
  for (auto kind : {advasv::filters::FilterKind::kGaussian, advasv::filters::FilterKind::kMedian,
                    advasv::filters::FilterKind::kMean}) {
    for (std::size_t w : {1u, 3u, 5u, 7u}) {
      for (double c : {-3.25, 0.0, 0.1, 7.0}) {
        const FeatureMatrix x(cfg.corpus.frames, cfg.corpus.channels, c);
        constants = constants && advasv::filters::ApplyFilter({kind, w, 1.3}, x) == x;
      }
    }
  }
  const auto& init = run.summary.recon_init;
  bool recon_ok = true;
  std::string detail = Fmt("kernel |sum-1| max %.3g; constants %s; held-out L1 init %.4f",
                           worst_sum, constants ? "preserved" : "NOT preserved", init.altered_l1);
  for (int i = 0; i < 2; ++i) {
    const auto& e = run.summary.recon[i];
    const double reduction = 1.0 - e.altered_l1 / init.altered_l1;
    recon_ok = recon_ok && reduction >= 0.5 && e.clean_l1 < 0.15;
    detail += Fmt("; recon%d held-out L1 %.4f (-%.1f%%), clean-input L1 %.4f", i, e.altered_l1,
                  100.0 * reduction, e.clean_l1);
  }
  Report(8, worst_sum <= 1e-12 && constants && recon_ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run for the default experiment"};
  std::string config_path;
  std::string out_dir = "acceptance_out";
  std::size_t threads = 1;
  bool rerun = true;
  bool verbose = false;
  app.add_option("--config", config_path, "Experiment config; defaults when omitted");
  app.add_option("--out", out_dir, "Work directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for the rerun")->capture_default_str();
  app.add_flag("!--no-rerun", rerun, "Skip the determinism rerun (criterion 7 then fails)");
  app.add_flag("-v,--verbose", verbose, "Pipeline progress on stderr");
  CLI11_PARSE(app, argc, argv);

  try {
    const h::ExperimentConfig cfg =
        h::ExperimentConfig::FromFile(config_path.empty() ? h::ConfigFile{}
                                                          : h::ConfigFile::Load(config_path));
    std::printf("config hash %s\n", h::HashHex(cfg.Hash()).c_str());
    h::RunOptions a, b;
    a.out_dir = fs::path(out_dir) / "run";
    b.out_dir = fs::path(out_dir) / "rerun";
    b.threads = threads;
    a.log = b.log = verbose ? &std::cerr : nullptr;

    const auto t = Clock::now();
    const PipelineRun run = RunPipeline(cfg, a);
    std::printf("pipeline %.1fs (gen %.1fs, train %.1fs, attack %.1fs, evaluate %.1fs)\n",
                Since(t), run.gen_s, run.train_s, run.attack_s,
                run.table1_s + run.sweep_s + run.filters_s + run.aware_s);

    using advasv::metrics::EvalReport;
    Criterion1(EvalReport::Load(a.out_dir / "table1.csv"), run);
    Criterion2(cfg, EvalReport::Load(a.out_dir / "sweep_k.csv"), run);
    Criterion3(cfg, EvalReport::Load(a.out_dir / "filters.csv"));
    Criterion4(EvalReport::Load(a.out_dir / "aware.csv"));
    Criterion5();
    Criterion6();
    Criterion7(cfg, a, b, rerun);
    Criterion8(cfg, run);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::size_t failed = 0;
  for (const auto& l : lines) failed += !l.pass;
  std::printf("%zu of %zu criteria passed\n", lines.size() - failed, lines.size());
  return failed == 0 ? 0 : 1;
}
