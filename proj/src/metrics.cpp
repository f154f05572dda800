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

#include "advasv/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "advasv/binary_io.hpp"
#include "advasv/error.hpp"

namespace advasv::metrics {

namespace {

void RequireBothClasses(const ScoredTrials& st, const char* what) {
  if (st.scores.size() != st.is_target.size()) {
    throw ValidationError(std::string(what) + ": scores/labels length mismatch");
  }
  const auto n_tar = std::count(st.is_target.begin(), st.is_target.end(), true);
  if (n_tar == 0 || n_tar == static_cast<long>(st.size())) {
    throw ValidationError(std::string(what) +
                          ": need at least one target and one nontarget trial");
  }
}

std::string FormatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<DetPoint> DetPoints(const ScoredTrials& st) {
  if (st.scores.empty()) throw ValidationError("det_points: no trials");
  if (st.scores.size() != st.is_target.size()) {
    throw ValidationError("det_points: scores/labels length mismatch");
  }
  std::vector<std::size_t> order(st.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return st.scores[a] < st.scores[b]; });
  const std::size_t n_tar = std::count(st.is_target.begin(), st.is_target.end(), true);
  const std::size_t n_non = st.size() - n_tar;
  auto rate = [](std::size_t k, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<DetPoint> points;
  points.reserve(st.size() + 2);
  points.push_back({-inf, 0.0, n_non ? 1.0 : 0.0});
  // Sweep thresholds upward: at threshold s, every score strictly below s is
  // rejected.
  std::size_t below_tar = 0, below_non = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = st.scores[order[i]];
    points.push_back({s, rate(below_tar, n_tar), rate(n_non - below_non, n_non)});
    for (; i < order.size() && st.scores[order[i]] == s; ++i) {
      (st.is_target[order[i]] ? below_tar : below_non)++;
    }
  }
  points.push_back({inf, n_tar ? 1.0 : 0.0, 0.0});
  return points;
}

double EerFromDet(const std::vector<DetPoint>& points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = points[i].p_miss - points[i].p_fa;
    if (d == 0.0) return 100.0 * points[i].p_miss;
    if (d > 0.0) {
      if (i == 0) return 100.0 * points[i].p_miss;
      const DetPoint& a = points[i - 1];
      const DetPoint& b = points[i];
      const double da = a.p_miss - a.p_fa;
      const double t = da / (da - d);
      return 100.0 * (a.p_miss + t * (b.p_miss - a.p_miss));
    }
  }
  return 100.0 * points.back().p_miss;
}

double Eer(const ScoredTrials& st) {
  RequireBothClasses(st, "eer");
  return EerFromDet(DetPoints(st));
}

double MinDcf(const ScoredTrials& st, const DcfParams& p) {
  RequireBothClasses(st, "min_dcf");
  if (!(p.p_target > 0.0 && p.p_target < 1.0) || !(p.c_miss > 0.0) || !(p.c_fa > 0.0)) {
    throw ValidationError("min_dcf: invalid cost parameters");
  }
  const double w_miss = p.c_miss * p.p_target;
  const double w_fa = p.c_fa * (1.0 - p.p_target);
  const double norm = std::min(w_miss, w_fa);
  double best = std::numeric_limits<double>::infinity();
  for (const DetPoint& pt : DetPoints(st)) {
    best = std::min(best, (w_miss * pt.p_miss + w_fa * pt.p_fa) / norm);
  }
  return best;
}

const ReportRow& EvalReport::Row(const std::string& condition) const {
  for (const ReportRow& r : rows) {
    if (r.condition == condition) return r;
  }
  throw ValidationError("report has no condition '" + condition + "'");
}

std::string EvalReport::ToCsv() const {
  std::ostringstream os;
  os << "condition,n_trials,eer_percent,min_dcf,config_hash,seed\n";
  for (const ReportRow& r : rows) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, r.config_hash);
    os << r.condition << ',' << r.n_trials << ',' << FormatReal(r.eer_percent) << ','
       << FormatReal(r.min_dcf) << ',' << hash << ',' << r.seed << '\n';
  }
  return os.str();
}

EvalReport EvalReport::FromCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "condition,n_trials,eer_percent,min_dcf,config_hash,seed") {
    throw ValidationError("report csv: unexpected header");
  }
  EvalReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != 6) {
      throw ValidationError("report csv line " + std::to_string(lineno) +
                            ": expected 6 fields");
    }
    ReportRow r;
    try {
      r.condition = fields[0];
      r.n_trials = std::stoull(fields[1]);
      r.eer_percent = std::stod(fields[2]);
      r.min_dcf = std::stod(fields[3]);
      r.config_hash = std::stoull(fields[4], nullptr, 16);
      r.seed = std::stoull(fields[5]);
    } catch (const std::logic_error&) {
      throw ValidationError("report csv line " + std::to_string(lineno) +
                            ": malformed number");
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

void EvalReport::Save(const std::filesystem::path& path) const {
  const std::string csv = ToCsv();
  io::WriteFile(path, std::span(reinterpret_cast<const std::uint8_t*>(csv.data()),
                                csv.size()));
}

EvalReport EvalReport::Load(const std::filesystem::path& path) {
  const auto bytes = io::ReadFile(path);
  return FromCsv(std::string(bytes.begin(), bytes.end()));
}

EvalReport Report(const std::vector<NamedScores>& conditions,
                  std::uint64_t config_hash, std::uint64_t seed,
                  const DcfParams& params) {
  EvalReport report;
  for (const NamedScores& c : conditions) {
    report.rows.push_back({c.condition, c.trials.size(), Eer(c.trials),
                           MinDcf(c.trials, params), config_hash, seed});
  }
  return report;
}

}  // namespace advasv::metrics
