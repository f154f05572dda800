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

#include "advasv/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "advasv/error.hpp"

namespace advasv::numcore {

namespace {

[[noreturn]] void ShapeFail(const std::string& op, const Shape& a,
                            const Shape& b) {
  throw ValidationError(op + ": shape mismatch " + ShapeToString(a) + " vs " +
                        ShapeToString(b));
}

void RequireRank(const std::string& op, Var v, std::size_t rank) {
  if (v.value().rank() != rank) {
    throw ValidationError(op + ": expected rank " + std::to_string(rank) +
                          ", got shape " + ShapeToString(v.shape()));
  }
}

void RequireSameShape(const std::string& op, Var a, Var b) {
  if (a.shape() != b.shape()) ShapeFail(op, a.shape(), b.shape());
}

Graph& SameGraph(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw ValidationError(std::string(op) + ": operands from different graphs");
  }
  return a.graph();
}

// c[m,k] += g[m,n] * b[k,n]^T, via a transposed copy of b so the inner loop
// is a contiguous axpy.
void GemmAccumulateNT(const double* g, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double gv = gi[j];
      if (gv == 0.0) continue;
      const double* bj = bt.data() + j * k;
      for (std::size_t p = 0; p < k; ++p) ci[p] += gv * bj[p];
    }
  }
}

// c[k,n] += a[m,k]^T * g[m,n]
void GemmAccumulateTN(const double* a, const double* g, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

template <typename F, typename D>
Var Unary(const char* name, Var a, F f, D dfdx) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const std::uint32_t ia = a.id();
  return a.graph().Record(
      name, {a}, std::move(out), [ia, dfdx](Graph& g, std::uint32_t self) {
        auto ga = g.MutableGrad(ia);
        if (ga.empty()) return;
        const auto& xv = g.Value(ia);
        const auto& yv = g.Value(self);
        auto gy = g.Grad(self);
        for (std::size_t i = 0; i < ga.size(); ++i) {
          ga[i] += gy[i] * dfdx(xv[i], yv[i]);
        }
      });
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

double GeluValue(double x) {
  return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

double GeluDerivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * kInvSqrt2);
  return cdf + x * pdf;
}

}  // namespace

void GemmAccumulate(std::span<const double> a, std::span<const double> b,
                    std::span<double> c, std::size_t m, std::size_t k,
                    std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

Var MatMul(Var a, Var b) {
  Graph& graph = SameGraph("matmul", a, b);
  RequireRank("matmul", a, 2);
  RequireRank("matmul", b, 2);
  const std::size_t m = a.value().rows(), k = a.value().cols();
  const std::size_t n = b.value().cols();
  if (b.value().rows() != k) ShapeFail("matmul", a.shape(), b.shape());
  Tensor out(Shape{m, n});
  GemmAccumulate(a.value().values(), b.value().values(), out.values(), m, k, n);
  const std::uint32_t ia = a.id(), ib = b.id();
  return graph.Record(
      "matmul", {a, b}, std::move(out),
      [ia, ib, m, k, n](Graph& g, std::uint32_t self) {
        auto gy = g.Grad(self);
        auto ga = g.MutableGrad(ia);
        auto gb = g.MutableGrad(ib);
        if (!ga.empty()) GemmAccumulateNT(gy.data(), g.Value(ib).data(), ga.data(), m, k, n);
        if (!gb.empty()) GemmAccumulateTN(g.Value(ia).data(), gy.data(), gb.data(), m, k, n);
      });
}

Var MatVec(Var w, Var x) {
  Graph& graph = SameGraph("matvec", w, x);
  RequireRank("matvec", w, 2);
  RequireRank("matvec", x, 1);
  const std::size_t n = w.value().rows(), d = w.value().cols();
  if (x.value().size() != d) ShapeFail("matvec", w.shape(), x.shape());
  Tensor out(Shape{n});
  GemmAccumulateNT(x.value().data(), w.value().data(), out.data(), 1, n, d);
  const std::uint32_t iw = w.id(), ix = x.id();
  return graph.Record(
      "matvec", {w, x}, std::move(out),
      [iw, ix, n, d](Graph& g, std::uint32_t self) {
        auto gy = g.Grad(self);
        auto gw = g.MutableGrad(iw);
        auto gx = g.MutableGrad(ix);
        // y = W x: dW = gy x^T, dx = W^T gy.
        if (!gw.empty()) GemmAccumulateTN(gy.data(), g.Value(ix).data(), gw.data(), 1, n, d);
        if (!gx.empty()) GemmAccumulateTN(g.Value(iw).data(), gy.data(), gx.data(), n, d, 1);
      });
}

Var Transpose(Var a) {
  RequireRank("transpose", a, 2);
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out(Shape{n, m});
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = x.at(i, j);
  const std::uint32_t ia = a.id();
  return a.graph().Record("transpose", {a}, std::move(out),
                          [ia, m, n](Graph& g, std::uint32_t self) {
                            auto ga = g.MutableGrad(ia);
                            if (ga.empty()) return;
                            auto gy = g.Grad(self);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j)
                                ga[i * n + j] += gy[j * m + i];
                          });
}

Var Elementwise(ElementwiseOp op, std::span<const Var> inputs, double scalar) {
  const bool binary = op == ElementwiseOp::kAdd || op == ElementwiseOp::kSub ||
                      op == ElementwiseOp::kMul;
  if (inputs.size() != (binary ? 2u : 1u)) {
    throw ValidationError("elementwise: wrong operand count");
  }
  switch (op) {
    case ElementwiseOp::kAdd: return Add(inputs[0], inputs[1]);
    case ElementwiseOp::kSub: return Sub(inputs[0], inputs[1]);
    case ElementwiseOp::kMul: return Mul(inputs[0], inputs[1]);
    case ElementwiseOp::kScale: return Scale(inputs[0], scalar);
    case ElementwiseOp::kRelu: return Relu(inputs[0]);
    case ElementwiseOp::kGelu: return Gelu(inputs[0]);
    case ElementwiseOp::kTanh: return Tanh(inputs[0]);
  }
  throw ValidationError("elementwise: unknown op");
}

Var Add(Var a, Var b) {
  Graph& graph = SameGraph("add", a, b);
  RequireSameShape("add", a, b);
  Tensor out = a.value();
  out.DropGrad();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return graph.Record("add", {a, b}, std::move(out),
                      [ia, ib](Graph& g, std::uint32_t self) {
                        auto gy = g.Grad(self);
                        for (std::uint32_t id : {ia, ib}) {
                          auto gx = g.MutableGrad(id);
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
                        }
                      });
}

Var Sub(Var a, Var b) {
  Graph& graph = SameGraph("sub", a, b);
  RequireSameShape("sub", a, b);
  Tensor out = a.value();
  out.DropGrad();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return graph.Record("sub", {a, b}, std::move(out),
                      [ia, ib](Graph& g, std::uint32_t self) {
                        auto gy = g.Grad(self);
                        auto ga = g.MutableGrad(ia);
                        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
                        auto gb = g.MutableGrad(ib);
                        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
                      });
}

Var Mul(Var a, Var b) {
  Graph& graph = SameGraph("mul", a, b);
  RequireSameShape("mul", a, b);
  Tensor out = a.value();
  out.DropGrad();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return graph.Record("mul", {a, b}, std::move(out),
                      [ia, ib](Graph& g, std::uint32_t self) {
                        auto gy = g.Grad(self);
                        auto ga = g.MutableGrad(ia);
                        const auto& bv = g.Value(ib);
                        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
                        auto gb = g.MutableGrad(ib);
                        const auto& av = g.Value(ia);
                        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
                      });
}

Var Scale(Var a, double s) {
  return Unary("scale", a, [s](double x) { return s * x; },
               [s](double, double) { return s; });
}

Var Relu(Var a) {
  return Unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Gelu(Var a) {
  return Unary("gelu", a, GeluValue,
               [](double x, double) { return GeluDerivative(x); });
}

Var Tanh(Var a) {
  return Unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var AddRowBias(Var x, Var bias) {
  Graph& graph = SameGraph("add_row_bias", x, bias);
  RequireRank("add_row_bias", x, 2);
  RequireRank("add_row_bias", bias, 1);
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (bias.value().size() != n) ShapeFail("add_row_bias", x.shape(), bias.shape());
  Tensor out = x.value();
  out.DropGrad();
  const auto& b = bias.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  const std::uint32_t ix = x.id(), ib = bias.id();
  return graph.Record("add_row_bias", {x, bias}, std::move(out),
                      [ix, ib, m, n](Graph& g, std::uint32_t self) {
                        auto gy = g.Grad(self);
                        auto gx = g.MutableGrad(ix);
                        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
                        auto gb = g.MutableGrad(ib);
                        if (gb.empty()) return;
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < n; ++j) gb[j] += gy[i * n + j];
                      });
}

Var Sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const std::uint32_t ia = a.id();
  return a.graph().Record("sum", {a}, Tensor::Scalar(acc),
                          [ia](Graph& g, std::uint32_t self) {
                            const double gy = g.Grad(self)[0];
                            for (double& v : g.MutableGrad(ia)) v += gy;
                          });
}

Var Mean(Var a) { return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var MeanRows(Var x) {
  RequireRank("mean_rows", x, 2);
  const std::size_t m = x.value().rows(), n = x.value().cols();
  Tensor out(Shape{n});
  const auto& xv = x.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
  const std::uint32_t ix = x.id();
  return x.graph().Record("mean_rows", {x}, std::move(out),
                          [ix, m, n, inv](Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            auto gy = g.Grad(self);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += gy[j] * inv;
                          });
}

Var Reshape(Var x, Shape shape) {
  if (NumElements(shape) != x.value().size()) {
    ShapeFail("reshape", x.shape(), shape);
  }
  Tensor out(std::move(shape), x.value().storage());
  const std::uint32_t ix = x.id();
  return x.graph().Record("reshape", {x}, std::move(out),
                          [ix](Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            auto gy = g.Grad(self);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
                          });
}

Var SliceCols(Var x, std::size_t begin, std::size_t count) {
  RequireRank("slice_cols", x, 2);
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (count == 0 || begin + count > n) {
    throw ValidationError("slice_cols: columns [" + std::to_string(begin) + ", " +
                          std::to_string(begin + count) + ") out of range for " +
                          ShapeToString(x.shape()));
  }
  Tensor out(Shape{m, count});
  const auto& xv = x.value();
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(xv.data() + i * n + begin, count, out.data() + i * count);
  const std::uint32_t ix = x.id();
  return x.graph().Record("slice_cols", {x}, std::move(out),
                          [ix, m, n, begin, count](Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            auto gy = g.Grad(self);
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < count; ++j)
                                gx[i * n + begin + j] += gy[i * count + j];
                          });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no operands");
  const std::size_t m = parts[0].value().rows();
  std::size_t n = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    RequireRank("concat_cols", p, 2);
    if (p.value().rows() != m) ShapeFail("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.value().cols());
    n += p.value().cols();
  }
  Tensor out(Shape{m, n});
  std::size_t offset = 0;
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) {
    const std::size_t w = p.value().cols();
    const auto& pv = p.value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pv.data() + i * w, w, out.data() + i * n + offset);
    offset += w;
    ids.push_back(p.id());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].graph().Record(
      "concat_cols", std::move(inputs), std::move(out),
      [ids, widths, m, n](Graph& g, std::uint32_t self) {
        auto gy = g.Grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          auto gp = g.MutableGrad(ids[k]);
          const std::size_t w = widths[k];
          if (!gp.empty()) {
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += gy[i * n + off + j];
          }
          off += w;
        }
      });
}

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  Graph& graph = SameGraph("layer_norm", x, gain);
  const std::size_t d = x.value().last_dim();
  if (x.value().rank() == 0 || d == 0) throw ValidationError("layer_norm: d must be positive");
  if (!(eps > 0.0)) throw ValidationError("layer_norm: eps must be positive");
  if (gain.value().size() != d || bias.value().size() != d) {
    ShapeFail("layer_norm", x.shape(), gain.shape());
  }
  const std::size_t rows = x.value().size() / d;
  const auto& xv = x.value();
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  Tensor out(x.shape());
  // Normalized activations and inverse deviations are kept for backward.
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = gv[j] * h + bv[j];
    }
  }
  const std::uint32_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return graph.Record(
      "layer_norm", {x, gain, bias}, std::move(out),
      [ix, ig, ib, rows, d, xhat, inv_std](Graph& g, std::uint32_t self) {
        auto gy = g.Grad(self);
        auto gx = g.MutableGrad(ix);
        auto gg = g.MutableGrad(ig);
        auto gb = g.MutableGrad(ib);
        const auto& gain_v = g.Value(ig);
        std::vector<double> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* h = xhat->data() + r * d;
          const double* dy = gy.data() + r * d;
          if (!gg.empty()) for (std::size_t j = 0; j < d; ++j) gg[j] += dy[j] * h[j];
          if (!gb.empty()) for (std::size_t j = 0; j < d; ++j) gb[j] += dy[j];
          if (gx.empty()) continue;
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = dy[j] * gain_v[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * h[j];
          }
          mean_dh /= static_cast<double>(d);
          mean_dh_h /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (std::size_t j = 0; j < d; ++j) {
            gx[r * d + j] += is * (dh[j] - mean_dh - h[j] * mean_dh_h);
          }
        }
      });
}

Var SoftmaxRows(Var x) {
  const std::size_t n = x.value().last_dim();
  if (x.value().rank() > 2) throw ValidationError("softmax_rows: rank must be <= 2");
  const std::size_t m = x.value().size() / n;
  const auto& xv = x.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = xv.data() + i * n;
    double* yr = out.data() + i * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= total;
  }
  const std::uint32_t ix = x.id();
  return x.graph().Record("softmax_rows", {x}, std::move(out),
                          [ix, m, n](Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            auto gy = g.Grad(self);
                            const auto& y = g.Value(self);
                            for (std::size_t i = 0; i < m; ++i) {
                              double dot = 0.0;
                              for (std::size_t j = 0; j < n; ++j) dot += gy[i * n + j] * y[i * n + j];
                              for (std::size_t j = 0; j < n; ++j)
                                gx[i * n + j] += y[i * n + j] * (gy[i * n + j] - dot);
                            }
                          });
}

Var Dot(Var a, Var b) {
  Graph& graph = SameGraph("dot", a, b);
  RequireSameShape("dot", a, b);
  double acc = 0.0;
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return graph.Record("dot", {a, b}, Tensor::Scalar(acc),
                      [ia, ib](Graph& g, std::uint32_t self) {
                        const double gy = g.Grad(self)[0];
                        auto ga = g.MutableGrad(ia);
                        const auto& bv = g.Value(ib);
                        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy * bv[i];
                        auto gb = g.MutableGrad(ib);
                        const auto& av = g.Value(ia);
                        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy * av[i];
                      });
}

Var L2Normalize(Var x) {
  const std::size_t d = x.value().last_dim();
  if (x.value().rank() == 0 || x.value().rank() > 2) {
    throw ValidationError("l2_normalize: expected a vector or matrix");
  }
  const std::size_t rows = x.value().size() / d;
  const auto& xv = x.value();
  Tensor out(x.shape());
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += xv[r * d + j] * xv[r * d + j];
    const double norm = std::sqrt(ss);
    if (!(norm > 0.0)) throw ValidationError("l2_normalize: zero-norm input");
    (*norms)[r] = norm;
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] / norm;
  }
  const std::uint32_t ix = x.id();
  return x.graph().Record("l2_normalize", {x}, std::move(out),
                          [ix, rows, d, norms](Graph& g, std::uint32_t self) {
                            auto gx = g.MutableGrad(ix);
                            if (gx.empty()) return;
                            auto gy = g.Grad(self);
                            const auto& y = g.Value(self);
                            for (std::size_t r = 0; r < rows; ++r) {
                              double dot = 0.0;
                              for (std::size_t j = 0; j < d; ++j) dot += y[r * d + j] * gy[r * d + j];
                              const double inv = 1.0 / (*norms)[r];
                              for (std::size_t j = 0; j < d; ++j)
                                gx[r * d + j] += (gy[r * d + j] - y[r * d + j] * dot) * inv;
                            }
                          });
}

Var CosineSimilarity(Var u, Var v) {
  Graph& graph = SameGraph("cosine_similarity", u, v);
  RequireSameShape("cosine_similarity", u, v);
  const auto& uv = u.value();
  const auto& vv = v.value();
  double uu = 0.0, vvn = 0.0, uvd = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    uu += uv[i] * uv[i];
    vvn += vv[i] * vv[i];
    uvd += uv[i] * vv[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vvn);
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw ValidationError("cosine_similarity: zero-norm input");
  }
  const double c = std::clamp(uvd / (nu * nv), -1.0, 1.0);
  const std::uint32_t iu = u.id(), iv = v.id();
  return graph.Record(
      "cosine_similarity", {u, v}, Tensor::Scalar(c),
      [iu, iv, nu, nv, c](Graph& g, std::uint32_t self) {
        const double gy = g.Grad(self)[0];
        const auto& uval = g.Value(iu);
        const auto& vval = g.Value(iv);
        // dc/du = v / (|u||v|) - c u / |u|^2, symmetric for v.
        auto gu = g.MutableGrad(iu);
        for (std::size_t i = 0; i < gu.size(); ++i)
          gu[i] += gy * (vval[i] / (nu * nv) - c * uval[i] / (nu * nu));
        auto gv = g.MutableGrad(iv);
        for (std::size_t i = 0; i < gv.size(); ++i)
          gv[i] += gy * (uval[i] / (nu * nv) - c * vval[i] / (nv * nv));
      });
}

Var L1Loss(Var pred, Var target) {
  Graph& graph = SameGraph("l1_loss", pred, target);
  RequireSameShape("l1_loss", pred, target);
  const auto& p = pred.value();
  const auto& t = target.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
  const double inv = 1.0 / static_cast<double>(p.size());
  const std::uint32_t ip = pred.id(), it = target.id();
  return graph.Record("l1_loss", {pred, target}, Tensor::Scalar(acc * inv),
                      [ip, it, inv](Graph& g, std::uint32_t self) {
                        const double gy = g.Grad(self)[0] * inv;
                        const auto& pv = g.Value(ip);
                        const auto& tv = g.Value(it);
                        auto gp = g.MutableGrad(ip);
                        auto gt = g.MutableGrad(it);
                        for (std::size_t i = 0; i < pv.size(); ++i) {
                          const double diff = pv[i] - tv[i];
                          const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                          if (!gp.empty()) gp[i] += gy * s;
                          if (!gt.empty()) gt[i] -= gy * s;
                        }
                      });
}

Var AdditiveAngularMargin(Var cosines, std::size_t label, double margin,
                          double scale) {
  RequireRank("additive_angular_margin", cosines, 1);
  const std::size_t n = cosines.value().size();
  if (label >= n) {
    throw ValidationError("aam_softmax: label " + std::to_string(label) +
                          " out of range for " + std::to_string(n) + " classes");
  }
  if (!(margin >= 0.0) || !(margin < std::numbers::pi / 2)) {
    throw ValidationError("aam_softmax: margin must lie in [0, pi/2)");
  }
  if (!(scale > 0.0)) throw ValidationError("aam_softmax: scale must be positive");
  Tensor out(Shape{n});
  const auto& cv = cosines.value();
  for (std::size_t j = 0; j < n; ++j) out[j] = scale * cv[j];
  const double c = std::clamp(cv[label], -1.0, 1.0);
  out[label] = scale * std::cos(std::acos(c) + margin);
  // d/dc cos(acos(c) + m) = cos(m) + c sin(m) / sqrt(1 - c^2)
  const double sin_theta = std::sqrt(std::max(1.0 - c * c, 1e-12));
  const double dlabel = scale * (std::cos(margin) + c * std::sin(margin) / sin_theta);
  const std::uint32_t ic = cosines.id();
  return cosines.graph().Record(
      "additive_angular_margin", {cosines}, std::move(out),
      [ic, label, scale, dlabel](Graph& g, std::uint32_t self) {
        auto gc = g.MutableGrad(ic);
        if (gc.empty()) return;
        auto gy = g.Grad(self);
        for (std::size_t j = 0; j < gc.size(); ++j) {
          gc[j] += gy[j] * (j == label ? dlabel : scale);
        }
      });
}

Var SoftmaxCrossEntropy(Var logits, std::size_t label) {
  RequireRank("softmax_cross_entropy", logits, 1);
  const std::size_t n = logits.value().size();
  if (label >= n) {
    throw ValidationError("softmax_cross_entropy: label " + std::to_string(label) +
                          " out of range for " + std::to_string(n) + " classes");
  }
  const auto& z = logits.value();
  const double mx = *std::max_element(z.values().begin(), z.values().end());
  auto probs = std::make_shared<std::vector<double>>(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    (*probs)[j] = std::exp(z[j] - mx);
    total += (*probs)[j];
  }
  for (double& p : *probs) p /= total;
  const double loss = std::log(total) + mx - z[label];
  const std::uint32_t iz = logits.id();
  return logits.graph().Record("softmax_cross_entropy", {logits},
                               Tensor::Scalar(loss),
                               [iz, label, probs](Graph& g, std::uint32_t self) {
                                 auto gz = g.MutableGrad(iz);
                                 if (gz.empty()) return;
                                 const double gy = g.Grad(self)[0];
                                 for (std::size_t j = 0; j < gz.size(); ++j) {
                                   gz[j] += gy * ((*probs)[j] - (j == label ? 1.0 : 0.0));
                                 }
                               });
}

Var AamSoftmaxLoss(Var embedding, Var class_weights, std::size_t label,
                   double margin, double scale) {
  RequireRank("aam_softmax", embedding, 1);
  RequireRank("aam_softmax", class_weights, 2);
  if (label >= class_weights.value().rows()) {
    throw ValidationError("aam_softmax: label " + std::to_string(label) +
                          " out of range for " +
                          std::to_string(class_weights.value().rows()) + " classes");
  }
  Var e = L2Normalize(embedding);
  Var w = L2Normalize(class_weights);
  Var cosines = MatVec(w, e);
  return SoftmaxCrossEntropy(AdditiveAngularMargin(cosines, label, margin, scale),
                             label);
}

Var MultiHeadAttention(Var q, Var k, Var v, std::size_t heads,
                       const AttentionParams& p) {
  RequireRank("multihead_attention", q, 2);
  const std::size_t d = q.value().cols();
  if (heads == 0 || d % heads != 0) {
    throw ValidationError("multihead_attention: model dim " + std::to_string(d) +
                          " not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var qp = AddRowBias(MatMul(q, p.wq), p.bq);
  Var kp = AddRowBias(MatMul(k, p.wk), p.bk);
  Var vp = AddRowBias(MatMul(v, p.wv), p.bv);
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = SliceCols(qp, h * dh, dh);
    Var kh = SliceCols(kp, h * dh, dh);
    Var vh = SliceCols(vp, h * dh, dh);
    Var logits = Scale(MatMul(qh, Transpose(kh)), scale);
    outs.push_back(MatMul(SoftmaxRows(logits), vh));
  }
  Var merged = heads == 1 ? outs[0] : ConcatCols(outs);
  return AddRowBias(MatMul(merged, p.wo), p.bo);
}

}  // namespace advasv::numcore
