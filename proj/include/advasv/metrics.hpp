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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace advasv::metrics {

// Parallel arrays of trial scores and labels (true = target trial).
struct ScoredTrials {
  std::vector<double> scores;
  std::vector<bool> is_target;

  std::size_t size() const { return scores.size(); }
  void Add(double score, bool target) {
    scores.push_back(score);
    is_target.push_back(target);
  }
};

struct DetPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

// One point per distinct score plus the -inf (accept all) and +inf (reject
// all) sentinels, in increasing threshold order. A trial is accepted iff its
// score >= threshold.
std::vector<DetPoint> DetPoints(const ScoredTrials& st);

// Equal error rate in percent, linearly interpolated between the adjacent DET
// points where p_miss - p_fa changes sign.
double Eer(const ScoredTrials& st);

// Normalized minimum detection cost:
//   min_t (c_miss p_target p_miss + c_fa (1 - p_target) p_fa)
//         / min(c_miss p_target, c_fa (1 - p_target)).
double MinDcf(const ScoredTrials& st, const DcfParams& params = {});

// Shared EER interpolation rule, exposed so that independent threshold sweeps
// can apply the identical convention.
double EerFromDet(const std::vector<DetPoint>& points);

struct ReportRow {
  std::string condition;
  std::size_t n_trials = 0;
  double eer_percent = 0.0;
  double min_dcf = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;

  const ReportRow& Row(const std::string& condition) const;

  // Header "condition,n_trials,eer_percent,min_dcf,config_hash,seed"; reals
  // use 17 significant digits and the hash is 16 lowercase hex digits.
  std::string ToCsv() const;
  static EvalReport FromCsv(const std::string& text);

  void Save(const std::filesystem::path& path) const;
  static EvalReport Load(const std::filesystem::path& path);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct NamedScores {
  std::string condition;
  ScoredTrials trials;
};

EvalReport Report(const std::vector<NamedScores>& conditions,
                  std::uint64_t config_hash, std::uint64_t seed,
                  const DcfParams& params = {});

}  // namespace advasv::metrics
