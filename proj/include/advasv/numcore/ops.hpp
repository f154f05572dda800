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
#include <span>
#include <vector>

#include "advasv/numcore/graph.hpp"

namespace advasv::numcore {

// Matrix products. MatMul: [m,k]x[k,n] -> [m,n]; MatVec: [n,d]x[d] -> [n].
Var MatMul(Var a, Var b);
Var MatVec(Var w, Var x);
Var Transpose(Var a);

enum class ElementwiseOp { kAdd, kSub, kMul, kScale, kRelu, kGelu, kTanh };

// Dispatches to the named functions below. Binary ops take two operands of
// identical shape; kScale takes one operand and `scalar`.
Var Elementwise(ElementwiseOp op, std::span<const Var> inputs,
                double scalar = 1.0);

Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
// relu'(0) is taken as 0.
Var Relu(Var a);
// Exact GELU, x * Phi(x).
Var Gelu(Var a);
Var Tanh(Var a);

// [m,n] + [n] broadcast over rows.
Var AddRowBias(Var x, Var bias);

Var Sum(Var a);
Var Mean(Var a);
// [m,n] -> [n], average over rows (time pooling).
Var MeanRows(Var x);
Var Reshape(Var x, Shape shape);
Var SliceCols(Var x, std::size_t begin, std::size_t count);
Var ConcatCols(std::span<const Var> parts);

// Normalizes over the trailing axis, then applies gain and bias.
Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);
Var SoftmaxRows(Var x);

Var Dot(Var a, Var b);
// Unit 2-norm along the trailing axis (row-wise for matrices). Zero rows are
// rejected.
Var L2Normalize(Var x);
Var CosineSimilarity(Var u, Var v);

// Mean absolute difference; the subgradient at exact ties is 0.
Var L1Loss(Var pred, Var target);

// Turns class cosines into scaled logits, replacing the true-class cosine
// cos(theta) with cos(theta + margin).
Var AdditiveAngularMargin(Var cosines, std::size_t label, double margin,
                          double scale);
Var SoftmaxCrossEntropy(Var logits, std::size_t label);
// AAM-softmax: embedding [d], class_weights [n,d]; both are length-normalized
// inside the loss.
Var AamSoftmaxLoss(Var embedding, Var class_weights, std::size_t label,
                   double margin, double scale);

struct AttentionParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

// Multi-head scaled dot-product attention over rows of q/k/v ([T,d] each).
Var MultiHeadAttention(Var q, Var k, Var v, std::size_t heads,
                       const AttentionParams& p);

// Plain kernels shared with code that works outside a graph.
// c[m,n] += a[m,k] * b[k,n]
void GemmAccumulate(std::span<const double> a, std::span<const double> b,
                    std::span<double> c, std::size_t m, std::size_t k,
                    std::size_t n);

}  // namespace advasv::numcore
