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

#include <cmath>

#include "advasv/error.hpp"
#include "advasv/filters.hpp"
#include "advasv/numcore/grad_check.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/rng.hpp"

using namespace advasv;
using namespace advasv::filters;

namespace {

FeatureMatrix RandomFeatures(std::size_t t, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix x(t, c);
  for (double& v : x.values()) v = rng.Normal();
  return x;
}

const FilterSpec kAll[] = {
    {FilterKind::kGaussian, 3, 1.0}, {FilterKind::kMedian, 3, 1.0}, {FilterKind::kMean, 3, 1.0},
    {FilterKind::kGaussian, 5, 0.7}, {FilterKind::kMedian, 5, 1.0}, {FilterKind::kMean, 7, 1.0},
};

}  // namespace

TEST_CASE("gaussian kernel values") {
  const auto k = GaussianKernel(3, 1.0);
  REQUIRE(k.size() == 3);
  CHECK(k[0] == doctest::Approx(0.2741).epsilon(1e-3));
  CHECK(k[1] == doctest::Approx(0.4519).epsilon(1e-3));
  CHECK(k[2] == k[0]);
  for (std::size_t w : {1u, 3u, 5u, 9u, 21u}) {
    for (double sigma : {0.3, 1.0, 4.0}) {
      const auto kk = GaussianKernel(w, sigma);
      double sum = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        CHECK(kk[i] > 0.0);
        CHECK(kk[i] == kk[w - 1 - i]);
        sum += kk[i];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(GaussianKernel(4, 1.0), ValidationError);
  CHECK_THROWS_AS(GaussianKernel(3, 0.0), ValidationError);
}

TEST_CASE("filter specs validate and name themselves") {
  CHECK_THROWS_AS(FilterSpec({FilterKind::kMean, 4, 1.0}).Validate(), ValidationError);
  CHECK_THROWS_AS(FilterSpec({FilterKind::kGaussian, 3, -1.0}).Validate(), ValidationError);
  CHECK(FilterSpec({FilterKind::kMedian, 3, 1.0}).Name() == "median3");
  CHECK(ParseFilterKind("gaussian") == FilterKind::kGaussian);
  CHECK_THROWS_AS(ParseFilterKind("box"), ValidationError);
  // Window larger than 2 min(T, C) - 1.
  CHECK_THROWS_AS(ApplyFilter({FilterKind::kMean, 9, 1.0}, FeatureMatrix(4, 10)), ValidationError);
}

TEST_CASE("filters preserve shape and constants") {
  const FeatureMatrix x(12, 9, -1.75);
  for (const auto& spec : kAll) {
    CAPTURE(spec.Name());
    const FeatureMatrix y = ApplyFilter(spec, x);
    CHECK(y.frames() == 12);
    CHECK(y.channels() == 9);
    CHECK(y == x);
  }
}

TEST_CASE("window one is the identity") {
  const FeatureMatrix x = RandomFeatures(8, 6, 1);
  for (FilterKind kind : {FilterKind::kGaussian, FilterKind::kMedian, FilterKind::kMean}) {
    CHECK(ApplyFilter({kind, 1, 1.0}, x) == x);
  }
}

TEST_CASE("median removes an isolated impulse") {
  FeatureMatrix x(7, 7, 0.0);
  x(3, 3) = 10.0;
  const FeatureMatrix y = ApplyFilter({FilterKind::kMedian, 3, 1.0}, x);
  CHECK(y(3, 3) == 0.0);
  CHECK(MaxAbsDiff(y, FeatureMatrix(7, 7, 0.0)) == 0.0);
}

TEST_CASE("mean filter matches a hand-evaluated window with replicated edges") {
  FeatureMatrix x(3, 3);
  double v = 1.0;
  for (double& e : x.values()) e = v++;
  const FeatureMatrix y = ApplyFilter({FilterKind::kMean, 3, 1.0}, x);
  CHECK(y(1, 1) == doctest::Approx(5.0));
  // Corner window rows {1,1,2} x cols {1,1,2} of [[1,2,3],[4,5,6],[7,8,9]].
  CHECK(y(0, 0) == doctest::Approx((4 * 1 + 2 * 2 + 2 * 4 + 5) / 9.0));
}

TEST_CASE("linear filters are linear") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FeatureMatrix a = RandomFeatures(10, 8, seed);
    const FeatureMatrix b = RandomFeatures(10, 8, seed + 100);
    FeatureMatrix mix(10, 8);
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix.values()[i] = 1.5 * a.values()[i] - 0.25 * b.values()[i];
    }
    for (const FilterSpec& spec : {FilterSpec{FilterKind::kGaussian, 5, 1.3}, FilterSpec{FilterKind::kMean, 3, 1.0}}) {
      const FeatureMatrix fa = ApplyFilter(spec, a), fb = ApplyFilter(spec, b);
      const FeatureMatrix fm = ApplyFilter(spec, mix);
      for (std::size_t i = 0; i < fm.size(); ++i) {
        CHECK(std::abs(fm.values()[i] - (1.5 * fa.values()[i] - 0.25 * fb.values()[i])) <= 1e-10);
      }
    }
  }
}

TEST_CASE("median filter is monotone") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const FeatureMatrix x = RandomFeatures(9, 7, seed);
    FeatureMatrix y = x;
    Rng rng(seed + 7);
    for (double& v : y.values()) v += std::abs(rng.Normal());
    const FeatureMatrix fx = ApplyFilter({FilterKind::kMedian, 3, 1.0}, x);
    const FeatureMatrix fy = ApplyFilter({FilterKind::kMedian, 3, 1.0}, y);
    for (std::size_t i = 0; i < fx.size(); ++i) CHECK(fx.values()[i] <= fy.values()[i]);
  }
}

TEST_CASE("graph form agrees with the direct form and stages report differentiability") {
  const FeatureMatrix x = RandomFeatures(10, 6, 3);
  for (const FilterSpec& spec : {FilterSpec{FilterKind::kGaussian, 3, 1.0}, FilterSpec{FilterKind::kMean, 5, 1.0}}) {
    numcore::Graph g;
    const auto y = FeatureMatrix::FromTensor(ApplyFilter(spec, g, g.Constant(x.ToTensor())).value());
    CHECK(MaxAbsDiff(y, ApplyFilter(spec, x)) <= 1e-14);
    const auto res = numcore::GradCheck(
        [spec](numcore::Graph& gg, numcore::Var v) {
          return numcore::Sum(numcore::Mul(ApplyFilter(spec, gg, v), ApplyFilter(spec, gg, v)));
        },
        x.ToTensor());
    CHECK(res.max_relative_error < 1e-5);
  }
  CHECK(FilterStage({FilterKind::kGaussian, 3, 1.0}).differentiable());
  CHECK_FALSE(FilterStage({FilterKind::kMedian, 3, 1.0}).differentiable());
  numcore::Graph g;
  CHECK_THROWS_AS(ApplyFilter({FilterKind::kMedian, 3, 1.0}, g, g.Constant(x.ToTensor())),
                  ValidationError);
}
