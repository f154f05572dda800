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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "advasv/error.hpp"
#include "advasv/harness/selfcheck.hpp"
#include "advasv/metrics.hpp"
#include "advasv/rng.hpp"

using namespace advasv;
using namespace advasv::metrics;

namespace {

ScoredTrials Make(std::vector<double> targets, std::vector<double> nontargets) {
  ScoredTrials st;
  for (double s : targets) st.Add(s, true);
  for (double s : nontargets) st.Add(s, false);
  return st;
}

}  // namespace

TEST_CASE("det points carry the accept-all and reject-all sentinels") {
  const auto pts = DetPoints(Make({0.9, 0.3}, {0.5, 0.1}));
  REQUIRE(pts.size() == 6);
  CHECK(pts.front().threshold == -std::numeric_limits<double>::infinity());
  CHECK(pts.front().p_miss == 0.0);
  CHECK(pts.front().p_fa == 1.0);
  CHECK(pts.back().threshold == std::numeric_limits<double>::infinity());
  CHECK(pts.back().p_miss == 1.0);
  CHECK(pts.back().p_fa == 0.0);
  CHECK_THROWS_AS(DetPoints(ScoredTrials{}), ValidationError);
}

TEST_CASE("det points on a hand case") {
  // Thresholds 0.1, 0.3, 0.5, 0.9.
  const auto pts = DetPoints(Make({0.9, 0.3}, {0.5, 0.1}));
  const double miss[] = {0.0, 0.0, 0.0, 0.5, 0.5, 1.0};
  const double fa[] = {1.0, 1.0, 0.5, 0.5, 0.0, 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CAPTURE(i);
    CHECK(pts[i].p_miss == miss[i]);
    CHECK(pts[i].p_fa == fa[i]);
  }
}

TEST_CASE("det curves are monotone") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto pts = DetPoints(harness::RandomScoreSet(2 + seed % 97, seed % 3 == 0, seed));
    for (std::size_t i = 1; i < pts.size(); ++i) {
      CHECK(pts[i].threshold > pts[i - 1].threshold);
      CHECK(pts[i].p_miss >= pts[i - 1].p_miss);
      CHECK(pts[i].p_fa <= pts[i - 1].p_fa);
    }
  }
}

TEST_CASE("eer hand cases") {
  CHECK(Eer(Make({0.9, 0.8}, {0.1, 0.2})) == 0.0);
  CHECK(Eer(Make({0.5, 0.5, 0.5}, {0.5, 0.5})) == 50.0);
  CHECK(Eer(Make({0.9, 0.8, 0.7, 0.3}, {0.6, 0.2, 0.1, 0.05})) == doctest::Approx(25.0));
  CHECK(Eer(Make({0.1, 0.2}, {0.9, 0.8})) == 100.0);
  CHECK_THROWS_AS(Eer(Make({0.1}, {})), ValidationError);
  CHECK_THROWS_AS(Eer(Make({}, {0.1})), ValidationError);
}

TEST_CASE("min dcf hand cases") {
  CHECK(MinDcf(Make({0.9, 0.8}, {0.1, 0.2})) == 0.0);
  CHECK(MinDcf(Make({0.9, 0.8, 0.7, 0.3}, {0.6, 0.2, 0.1, 0.05})) == doctest::Approx(0.25));
  // Scores independent of labels: no threshold beats rejecting everything.
  CHECK(MinDcf(Make({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(MinDcf(Make({0.1}, {})), ValidationError);
  DcfParams p;
  p.p_target = 0.5;
  CHECK(MinDcf(Make({0.9, 0.3}, {0.5, 0.1}), p) == doctest::Approx(0.5));
}

TEST_CASE("metrics match the brute-force sweep exactly") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.Below(400);
    const ScoredTrials st = harness::RandomScoreSet(n, seed % 2 == 0, seed);
    CAPTURE(seed);
    CHECK(Eer(st) == harness::BruteForceEer(st));
    CHECK(MinDcf(st) == harness::BruteForceMinDcf(st));
  }
}

TEST_CASE("metrics are bounded and invariant under monotone maps and permutation") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ScoredTrials st = harness::RandomScoreSet(50 + seed, seed % 2 == 1, seed);
    const double eer = Eer(st);
    const double dcf = MinDcf(st);
    CHECK(eer >= 0.0);
    CHECK(eer <= 100.0);
    CHECK(dcf <= 1.0);
    CHECK(dcf >= 0.0);

    ScoredTrials mapped = st;
    for (double& s : mapped.scores) s = std::exp(3.0 * s) + 7.0;
    CHECK(Eer(mapped) == eer);
    CHECK(MinDcf(mapped) == dcf);

    ScoredTrials permuted;
    Rng rng(seed);
    std::vector<std::size_t> order(st.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
    for (std::size_t i : order) permuted.Add(st.scores[i], st.is_target[i]);
    CHECK(Eer(permuted) == eer);
    CHECK(MinDcf(permuted) == dcf);
  }
}

TEST_CASE("report rows and csv round trip") {
  const ScoredTrials a = harness::RandomScoreSet(40, false, 1);
  const EvalReport r = Report({{"clean", a}, {"again", a}, {"adv", harness::RandomScoreSet(30, true, 2)}},
                              0xabcdef0123456789ULL, 7);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].eer_percent == r.rows[1].eer_percent);
  CHECK(r.rows[0].min_dcf == r.rows[1].min_dcf);
  CHECK(r.Row("adv").n_trials == 30);
  CHECK_THROWS_AS(r.Row("missing"), ValidationError);
  const std::string csv = r.ToCsv();
  CHECK(csv.rfind("condition,n_trials,eer_percent,min_dcf,config_hash,seed\n", 0) == 0);
  CHECK(csv.find("abcdef0123456789") != std::string::npos);
  CHECK(EvalReport::FromCsv(csv) == r);
  CHECK_THROWS_AS(EvalReport::FromCsv("bad header\n"), ValidationError);
}
