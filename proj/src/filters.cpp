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

#include "advasv/filters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "advasv/error.hpp"

namespace advasv::filters {

namespace nc = numcore;

namespace {

std::size_t Clamp(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

std::vector<double> LinearKernel(const FilterSpec& spec) {
  if (spec.kind == FilterKind::kGaussian) return GaussianKernel(spec.window, spec.sigma);
  return std::vector<double>(spec.window, 1.0 / static_cast<double>(spec.window));
}

// out[t, c] = sum_i k[i] x[clamp(t + i - r), c]  (axis 0), or the same along
// channels (axis 1). Evaluated as x[t, c] + sum_i k[i] (x[...] - x[t, c]) so a
// constant input comes back bit-exact.
void Correlate(const std::vector<double>& k, int axis, const double* x, double* out,
               std::size_t rows, std::size_t cols) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k.size() / 2);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double center = x[t * cols + c];
      double acc = 0.0;
      for (std::size_t i = 0; i < k.size(); ++i) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(i) - r;
        const std::size_t tt = axis == 0 ? Clamp(static_cast<std::ptrdiff_t>(t) + off, rows) : t;
        const std::size_t cc = axis == 1 ? Clamp(static_cast<std::ptrdiff_t>(c) + off, cols) : c;
        acc += k[i] * (x[tt * cols + cc] - center);
      }
      out[t * cols + c] = center + acc;
    }
  }
}

// Adjoint of Correlate: scatters gy back onto the clamped source positions.
void CorrelateAdjoint(const std::vector<double>& k, int axis, const double* gy,
                      double* gx, std::size_t rows, std::size_t cols) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k.size() / 2);
  double ksum = 0.0;
  for (double v : k) ksum += v;
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double g = gy[t * cols + c];
      gx[t * cols + c] += (1.0 - ksum) * g;
      for (std::size_t i = 0; i < k.size(); ++i) {
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(i) - r;
        const std::size_t tt = axis == 0 ? Clamp(static_cast<std::ptrdiff_t>(t) + off, rows) : t;
        const std::size_t cc = axis == 1 ? Clamp(static_cast<std::ptrdiff_t>(c) + off, cols) : c;
        gx[tt * cols + cc] += k[i] * g;
      }
    }
  }
}

nc::Var CorrelateVar(const std::vector<double>& k, int axis, nc::Var x) {
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  nc::Tensor out(x.shape());
  Correlate(k, axis, x.value().data(), out.data(), rows, cols);
  const std::uint32_t ix = x.id();
  return x.graph().Record(axis == 0 ? "filter_time" : "filter_channel", {x},
                          std::move(out),
                          [k, axis, ix, rows, cols](nc::Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            CorrelateAdjoint(k, axis, g.Grad(self).data(), gx.data(),
                                             rows, cols);
                          });
}

FeatureMatrix Median(const FeatureMatrix& x, std::size_t window) {
  const std::size_t rows = x.frames(), cols = x.channels();
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(window / 2);
  FeatureMatrix out(rows, cols);
  std::vector<double> buf;
  buf.reserve(window * window);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < cols; ++c) {
      buf.clear();
      for (std::ptrdiff_t i = -r; i <= r; ++i)
        for (std::ptrdiff_t j = -r; j <= r; ++j)
          buf.push_back(x(Clamp(static_cast<std::ptrdiff_t>(t) + i, rows),
                          Clamp(static_cast<std::ptrdiff_t>(c) + j, cols)));
      const std::size_t mid = buf.size() / 2;
      std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
      double m = buf[mid];
      if (buf.size() % 2 == 0) {
        const double lower = *std::max_element(buf.begin(), buf.begin() + mid);
        m = 0.5 * (lower + m);
      }
      out(t, c) = m;
    }
  }
  return out;
}

void CheckShape(const FilterSpec& spec, std::size_t rows, std::size_t cols) {
  if (spec.window > 2 * std::min(rows, cols) - 1) {
    throw ValidationError("filter: window " + std::to_string(spec.window) +
                          " too large for " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " input");
  }
}

}  // namespace

std::string ToString(FilterKind kind) {
  switch (kind) {
    case FilterKind::kGaussian: return "gaussian";
    case FilterKind::kMedian: return "median";
    case FilterKind::kMean: return "mean";
  }
  return "unknown";
}

FilterKind ParseFilterKind(const std::string& name) {
  if (name == "gaussian") return FilterKind::kGaussian;
  if (name == "median") return FilterKind::kMedian;
  if (name == "mean") return FilterKind::kMean;
  throw ValidationError("unknown filter kind '" + name + "'");
}

void FilterSpec::Validate() const {
  if (window == 0 || window % 2 == 0) {
    throw ValidationError("filter: window must be odd and >= 1, got " +
                          std::to_string(window));
  }
  if (kind == FilterKind::kGaussian && !(sigma > 0.0 && std::isfinite(sigma))) {
    throw ValidationError("filter: gaussian sigma must be positive and finite");
  }
}

std::string FilterSpec::Name() const {
  std::string name = ToString(kind) + std::to_string(window);
  if (kind == FilterKind::kGaussian) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%g", sigma);
    name += buf;
  }
  return name;
}

std::vector<double> GaussianKernel(std::size_t window, double sigma) {
  FilterSpec{FilterKind::kGaussian, window, sigma}.Validate();
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> k(window);
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
  }
  // Sum symmetric pairs from the tails inward so k stays exactly symmetric.
  double total = k[r];
  for (std::ptrdiff_t i = r; i >= 1; --i) total += 2.0 * k[r + i];
  for (double& v : k) v /= total;
  return k;
}

FeatureMatrix ApplyFilter(const FilterSpec& spec, const FeatureMatrix& x) {
  spec.Validate();
  CheckShape(spec, x.frames(), x.channels());
  if (spec.window == 1) return x;
  if (spec.kind == FilterKind::kMedian) return Median(x, spec.window);
  const auto k = LinearKernel(spec);
  FeatureMatrix tmp(x.frames(), x.channels());
  FeatureMatrix out(x.frames(), x.channels());
  Correlate(k, 0, x.values().data(), tmp.values().data(), x.frames(), x.channels());
  Correlate(k, 1, tmp.values().data(), out.values().data(), x.frames(), x.channels());
  return out;
}

nc::Var ApplyFilter(const FilterSpec& spec, nc::Graph& g, nc::Var x) {
  spec.Validate();
  if (&x.graph() != &g) throw ValidationError("filter: input from another graph");
  if (x.value().rank() != 2) throw ValidationError("filter: expected a [T, C] input");
  CheckShape(spec, x.value().rows(), x.value().cols());
  if (spec.kind == FilterKind::kMedian) {
    throw ValidationError("filter: median filter is not differentiable");
  }
  if (spec.window == 1) return x;
  const auto k = LinearKernel(spec);
  return CorrelateVar(k, 1, CorrelateVar(k, 0, x));
}

FilterStage::FilterStage(FilterSpec spec) : spec_(spec) { spec_.Validate(); }

FeatureMatrix FilterStage::Apply(const FeatureMatrix& x) const {
  return ApplyFilter(spec_, x);
}

nc::Var FilterStage::Apply(nc::Graph& g, nc::Var x) const {
  if (!differentiable()) return Stage::Apply(g, x);
  return ApplyFilter(spec_, g, x);
}

}  // namespace advasv::filters
