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

#include "advasv/harness/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "advasv/asv.hpp"
#include "advasv/attack.hpp"
#include "advasv/error.hpp"
#include "advasv/filters.hpp"
#include "advasv/numcore/ops.hpp"
#include "advasv/recon.hpp"
#include "advasv/rng.hpp"

namespace advasv::harness {

namespace nc = numcore;

namespace {

nc::Tensor Random(nc::Shape shape, Rng& rng, double scale = 1.0) {
  nc::Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.Normal();
  return t;
}

// Entries bounded away from zero, for ops with a kink there.
nc::Tensor AwayFromZero(nc::Shape shape, Rng& rng) {
  nc::Tensor t(std::move(shape));
  for (double& v : t.values()) {
    const double m = 0.1 + std::abs(rng.Normal());
    v = rng.Bernoulli(0.5) ? m : -m;
  }
  return t;
}

// Contracts an output with fixed random weights so every output coordinate
// contributes to the checked scalar.
nc::Var Weighted(nc::Var y, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, 0x57));
  return nc::Sum(nc::Mul(y, y.graph().Constant(Random(y.shape(), rng))));
}

using Builder = std::function<nc::Var(nc::Graph&, nc::Var, std::uint64_t)>;

GradCase Case(std::string name, nc::Shape shape, Builder build, std::size_t max_coords = 0,
              bool away_from_zero = false) {
  GradCase c;
  c.name = std::move(name);
  c.point = [shape, away_from_zero](std::uint64_t seed) {
    Rng rng(DeriveSeed(seed, 0x50));
    return away_from_zero ? AwayFromZero(shape, rng) : Random(shape, rng);
  };
  c.function = [build](std::uint64_t seed) -> nc::ScalarFunction {
    return [build, seed](nc::Graph& g, nc::Var x) { return build(g, x, seed); };
  };
  c.max_coords = max_coords;
  return c;
}

nc::Var Operand(nc::Graph& g, nc::Shape shape, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(DeriveSeed(seed, 0x4f, stream));
  return g.Constant(Random(std::move(shape), rng));
}

nc::AttentionParams AttentionOperands(nc::Graph& g, std::size_t d, std::uint64_t seed) {
  auto w = [&](std::uint64_t s) { return Operand(g, {d, d}, seed, 100 + s); };
  auto b = [&](std::uint64_t s) { return Operand(g, {d}, seed, 200 + s); };
  return {w(0), b(0), w(1), b(1), w(2), b(2), w(3), b(3)};
}

// Deliberately scales its incoming gradient by 1.5.
nc::Var CorruptedScale(nc::Var x, double s) {
  nc::Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x.value()[i];
  const std::uint32_t ix = x.id();
  return x.graph().Record("corrupted_scale", {x}, std::move(out),
                          [ix, s](nc::Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            auto gy = g.Grad(self);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 1.5 * s * gy[i];
                          });
}

bool Accepts(double score, double threshold) { return score >= threshold; }

struct Rates {
  double p_miss, p_fa;
};

std::vector<Rates> BruteForceCurve(const metrics::ScoredTrials& st) {
  std::vector<double> thresholds = st.scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double inf = std::numeric_limits<double>::infinity();
  thresholds.insert(thresholds.begin(), -inf);
  thresholds.push_back(inf);
  std::size_t n_tar = 0;
  for (bool t : st.is_target) n_tar += t;
  const std::size_t n_non = st.size() - n_tar;
  std::vector<Rates> curve;
  for (double thr : thresholds) {
    std::size_t miss = 0, fa = 0;
    for (std::size_t i = 0; i < st.size(); ++i) {
      const bool accept = Accepts(st.scores[i], thr);
      if (st.is_target[i] && !accept) ++miss;
      if (!st.is_target[i] && accept) ++fa;
    }
    curve.push_back({static_cast<double>(miss) / static_cast<double>(n_tar),
                     static_cast<double>(fa) / static_cast<double>(n_non)});
  }
  return curve;
}

std::string Format(const char* fmt, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::vector<GradCase> GradCases() {
  using G = nc::Graph;
  using V = nc::Var;
  using S = std::uint64_t;
  std::vector<GradCase> cases;
  cases.push_back(Case("matmul_lhs", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::MatMul(x, Operand(g, {4, 5}, s, 1)), s);
  }));
  cases.push_back(Case("matmul_rhs", {4, 5}, [](G& g, V x, S s) {
    return Weighted(nc::MatMul(Operand(g, {3, 4}, s, 1), x), s);
  }));
  cases.push_back(Case("matvec_matrix", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::MatVec(x, Operand(g, {4}, s, 1)), s);
  }));
  cases.push_back(Case("matvec_vector", {4}, [](G& g, V x, S s) {
    return Weighted(nc::MatVec(Operand(g, {3, 4}, s, 1), x), s);
  }));
  cases.push_back(Case("transpose", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Transpose(x), s);
  }));
  cases.push_back(Case("add", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::Add(x, Operand(g, {3, 4}, s, 1)), s);
  }));
  cases.push_back(Case("sub", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::Sub(Operand(g, {3, 4}, s, 1), x), s);
  }));
  cases.push_back(Case("mul", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::Mul(x, Operand(g, {3, 4}, s, 1)), s);
  }));
  cases.push_back(Case("mul_self", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Mul(x, x), s);
  }));
  cases.push_back(Case("scale", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Scale(x, -1.7), s);
  }));
  cases.push_back(Case("relu", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Relu(x), s);
  }, 0, true));
  cases.push_back(Case("gelu", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Gelu(x), s);
  }));
  cases.push_back(Case("tanh", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Tanh(x), s);
  }));
  cases.push_back(Case("add_row_bias_matrix", {3, 4}, [](G& g, V x, S s) {
    return Weighted(nc::AddRowBias(x, Operand(g, {4}, s, 1)), s);
  }));
  cases.push_back(Case("add_row_bias_bias", {4}, [](G& g, V x, S s) {
    return Weighted(nc::AddRowBias(Operand(g, {3, 4}, s, 1), x), s);
  }));
  cases.push_back(Case("sum", {3, 4}, [](G&, V x, S) { return nc::Sum(nc::Mul(x, x)); }));
  cases.push_back(Case("mean", {3, 4}, [](G&, V x, S) { return nc::Mean(nc::Mul(x, x)); }));
  cases.push_back(Case("mean_rows", {5, 4}, [](G&, V x, S s) {
    return Weighted(nc::MeanRows(x), s);
  }));
  cases.push_back(Case("reshape", {3, 4}, [](G&, V x, S s) {
    return Weighted(nc::Reshape(x, {2, 6}), s);
  }));
  cases.push_back(Case("slice_cols", {3, 6}, [](G&, V x, S s) {
    return Weighted(nc::SliceCols(x, 1, 3), s);
  }));
  cases.push_back(Case("concat_cols", {3, 2}, [](G& g, V x, S s) {
    const V parts[] = {Operand(g, {3, 3}, s, 1), x, x};
    return Weighted(nc::ConcatCols(parts), s);
  }));
  cases.push_back(Case("layer_norm_input", {3, 6}, [](G& g, V x, S s) {
    return Weighted(nc::LayerNorm(x, Operand(g, {6}, s, 1), Operand(g, {6}, s, 2)), s);
  }));
  cases.push_back(Case("layer_norm_gain", {6}, [](G& g, V x, S s) {
    return Weighted(nc::LayerNorm(Operand(g, {3, 6}, s, 1), x, Operand(g, {6}, s, 2)), s);
  }));
  cases.push_back(Case("layer_norm_bias", {6}, [](G& g, V x, S s) {
    return Weighted(nc::LayerNorm(Operand(g, {3, 6}, s, 1), Operand(g, {6}, s, 2), x), s);
  }));
  cases.push_back(Case("softmax_rows", {3, 5}, [](G&, V x, S s) {
    return Weighted(nc::SoftmaxRows(x), s);
  }));
  cases.push_back(Case("dot", {6}, [](G& g, V x, S s) {
    return nc::Dot(x, Operand(g, {6}, s, 1));
  }));
  cases.push_back(Case("l2_normalize_vector", {6}, [](G&, V x, S s) {
    return Weighted(nc::L2Normalize(x), s);
  }));
  cases.push_back(Case("l2_normalize_rows", {3, 5}, [](G&, V x, S s) {
    return Weighted(nc::L2Normalize(x), s);
  }));
  cases.push_back(Case("cosine", {6}, [](G& g, V x, S s) {
    return nc::CosineSimilarity(Operand(g, {6}, s, 1), x);
  }));
  cases.push_back(Case("l1_loss", {3, 4}, [](G& g, V x, S) {
    // The constant target is zero, so a point away from zero keeps every
    // difference off the kink.
    return nc::L1Loss(x, g.Constant(nc::Tensor({3, 4})));
  }, 0, true));
  // A small scale keeps the off-target classes out of softmax saturation,
  // where the finite differences would be pure rounding noise.
  cases.push_back(Case("aam_softmax_embedding", {5}, [](G& g, V x, S s) {
    return nc::AamSoftmaxLoss(x, Operand(g, {4, 5}, s, 1), s % 4, 0.2, 4.0);
  }));
  cases.push_back(Case("aam_softmax_class_weights", {4, 5}, [](G& g, V x, S s) {
    return nc::AamSoftmaxLoss(Operand(g, {5}, s, 1), x, s % 4, 0.2, 4.0);
  }));
  cases.push_back(Case("softmax_cross_entropy", {6}, [](G&, V x, S s) {
    return nc::SoftmaxCrossEntropy(x, s % 6);
  }));
  cases.push_back(Case("attention_input", {5, 8}, [](G& g, V x, S s) {
    return Weighted(nc::MultiHeadAttention(x, x, x, 2, AttentionOperands(g, 8, s)), s);
  }));
  cases.push_back(Case("attention_query_weight", {8, 8}, [](G& g, V x, S s) {
    nc::AttentionParams p = AttentionOperands(g, 8, s);
    p.wq = x;
    const V in = Operand(g, {5, 8}, s, 1);
    return Weighted(nc::MultiHeadAttention(in, in, in, 2, p), s);
  }));
  cases.push_back(Case("attention_value_bias", {8}, [](G& g, V x, S s) {
    nc::AttentionParams p = AttentionOperands(g, 8, s);
    p.bv = x;
    const V in = Operand(g, {5, 8}, s, 1);
    return Weighted(nc::MultiHeadAttention(in, in, in, 2, p), s);
  }));
  cases.push_back(Case("filter_gaussian", {8, 6}, [](G& g, V x, S s) {
    return Weighted(filters::ApplyFilter({filters::FilterKind::kGaussian, 3, 1.0}, g, x), s);
  }));
  cases.push_back(Case("filter_mean", {8, 6}, [](G& g, V x, S s) {
    return Weighted(filters::ApplyFilter({filters::FilterKind::kMean, 5, 1.0}, g, x), s);
  }));
  cases.push_back(Case("recon_forward", {10, 6}, [](G& g, V x, S s) {
    const recon::ReconNet net({6, 8, 2, 2, 12}, DeriveSeed(s, 0x52));
    return Weighted(net.Forward(net.Bind(g, false), x, s % 7), s);
  }));
  cases.push_back(Case("asv_embed", {10, 6}, [](G& g, V x, S s) {
    const asv::EmbeddingNet net({6, 10, 5, 3}, DeriveSeed(s, 0x41));
    return Weighted(net.Embed(net.Bind(g, false), x), s);
  }));
  // Default-sized nets, one substitute purifier in front of the scorer. The
  // nets are built once per seed rather than per evaluation.
  GradCase aware = Case("aware_victim", {16, 24}, nullptr, 24);
  aware.function = [](S s) -> nc::ScalarFunction {
    auto asv_net = std::make_shared<const asv::EmbeddingNet>(asv::EmbeddingConfig{},
                                                             DeriveSeed(s, 0x41));
    auto recon_net = std::make_shared<const recon::ReconNet>(recon::ReconConfig{},
                                                             DeriveSeed(s, 0x52));
    auto victim = std::make_shared<const attack::VictimPipeline>(
        attack::MakeVictim(asv_net, {std::make_shared<recon::Cascade>(recon_net, 1)}));
    Rng rng(DeriveSeed(s, 0x45));
    const nc::Tensor enrolled = victim->Enroll(FeatureMatrix::FromTensor(Random({16, 24}, rng)));
    return [victim, enrolled](G& g, V x) { return victim->Score(g, x, enrolled); };
  };
  cases.push_back(std::move(aware));
  return cases;
}

GradCase CorruptedGradCase() {
  return Case("corrupted_scale", {3, 4}, [](nc::Graph&, nc::Var x, std::uint64_t s) {
    return Weighted(CorruptedScale(x, 2.0), s);
  });
}

double BruteForceEer(const metrics::ScoredTrials& st) {
  const std::vector<Rates> curve = BruteForceCurve(st);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double d = curve[i].p_miss - curve[i].p_fa;
    if (d == 0.0) return 100.0 * curve[i].p_miss;
    if (d > 0.0) {
      if (i == 0) return 100.0 * curve[i].p_miss;
      const double da = curve[i - 1].p_miss - curve[i - 1].p_fa;
      const double t = da / (da - d);
      return 100.0 * (curve[i - 1].p_miss + t * (curve[i].p_miss - curve[i - 1].p_miss));
    }
  }
  return 100.0 * curve.back().p_miss;
}

double BruteForceMinDcf(const metrics::ScoredTrials& st, const metrics::DcfParams& p) {
  const double w_miss = p.c_miss * p.p_target;
  const double w_fa = p.c_fa * (1.0 - p.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (const Rates& r : BruteForceCurve(st)) {
    best = std::min(best, (w_miss * r.p_miss + w_fa * r.p_fa) / std::min(w_miss, w_fa));
  }
  return best;
}

metrics::ScoredTrials RandomScoreSet(std::size_t n, bool ties, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random score set: need at least 2 trials");
  Rng rng(seed);
  metrics::ScoredTrials st;
  for (std::size_t i = 0; i < n; ++i) {
    // The first two trials fix one of each label.
    const bool target = i < 2 ? i == 0 : rng.Bernoulli(0.5);
    double s = rng.Normal(target ? 1.0 : 0.0, 1.0);
    if (ties) s = std::round(s * 2.0) / 2.0;
    st.Add(s, target);
  }
  return st;
}

std::vector<CheckResult> RunSelfCheck(const SelfCheckOptions& options) {
  std::vector<CheckResult> results;
  std::vector<GradCase> cases = GradCases();
  if (options.corrupt_gradient) cases.push_back(CorruptedGradCase());
  for (const GradCase& c : cases) {
    CheckResult r{"grad/" + c.name, true, ""};
    double worst = 0.0;
    for (std::size_t s = 0; s < options.grad_seeds; ++s) {
      try {
        const auto res = nc::GradCheck(c.function(s), c.point(s),
                                       {.h = 1e-4, .max_coords = c.max_coords, .seed = s});
        worst = std::max(worst, res.max_relative_error);
      } catch (const std::exception& e) {
        r.passed = false;
        r.detail = e.what();
        break;
      }
    }
    if (r.passed) {
      r.passed = worst < 1e-5;
      r.detail = Format("max relative error %.3g", worst);
    }
    results.push_back(std::move(r));
  }

  {
    CheckResult r{"metrics/brute_force_oracle", true, ""};
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < options.metric_sets; ++i) {
      Rng rng(DeriveSeed(0x4d4554, i));
      const auto st = RandomScoreSet(2 + rng.Below(400), i % 2 == 1, DeriveSeed(0x5345, i));
      if (metrics::Eer(st) != BruteForceEer(st) ||
          metrics::MinDcf(st) != BruteForceMinDcf(st)) {
        ++mismatches;
      }
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(mismatches) + " of " + std::to_string(options.metric_sets) +
               " score sets disagree";
    results.push_back(std::move(r));
  }

  {
    CheckResult r{"filters/gaussian_kernel_sum", true, ""};
    double worst = 0.0;
    for (std::size_t w : {1, 3, 5, 7, 9}) {
      for (double sigma : {0.3, 1.0, 2.5}) {
        double sum = 0.0;
        for (double v : filters::GaussianKernel(w, sigma)) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
    r.passed = worst <= 1e-12;
    r.detail = Format("max |sum - 1| = %.3g", worst);
    results.push_back(std::move(r));
  }
  {
    CheckResult r{"filters/constant_preservation", true, ""};
    const FeatureMatrix x(12, 9, 0.37);
    for (auto kind : {filters::FilterKind::kGaussian, filters::FilterKind::kMedian,
                      filters::FilterKind::kMean}) {
      for (std::size_t w : {1, 3, 5}) {
        const FeatureMatrix y = filters::ApplyFilter({kind, w, 1.0}, x);
        if (MaxAbsDiff(x, y) > 1e-15) {
          r.passed = false;
          r.detail = filters::ToString(kind) + std::to_string(w) + " changed a constant field";
        }
      }
    }
    results.push_back(std::move(r));
  }
  {
    CheckResult r{"filters/median_impulse", true, ""};
    FeatureMatrix x(5, 5, 0.0);
    x(2, 2) = 10.0;
    const FeatureMatrix y = filters::ApplyFilter({filters::FilterKind::kMedian, 3, 1.0}, x);
    r.passed = y(2, 2) == 0.0;
    r.detail = Format("center output %g", y(2, 2));
    results.push_back(std::move(r));
  }
  {
    CheckResult r{"filters/linearity", true, ""};
    Rng rng(0x4c494e);
    FeatureMatrix a(10, 8), b(10, 8), mix(10, 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.values()[i] = rng.Normal();
      b.values()[i] = rng.Normal();
      mix.values()[i] = 0.7 * a.values()[i] - 1.3 * b.values()[i];
    }
    double worst = 0.0;
    for (auto kind : {filters::FilterKind::kGaussian, filters::FilterKind::kMean}) {
      const filters::FilterSpec spec{kind, 3, 1.0};
      const FeatureMatrix fa = filters::ApplyFilter(spec, a), fb = filters::ApplyFilter(spec, b);
      const FeatureMatrix fm = filters::ApplyFilter(spec, mix);
      for (std::size_t i = 0; i < fa.size(); ++i) {
        worst = std::max(worst,
                         std::abs(fm.values()[i] - (0.7 * fa.values()[i] - 1.3 * fb.values()[i])));
      }
    }
    r.passed = worst <= 1e-10;
    r.detail = Format("max deviation %.3g", worst);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace advasv::harness
