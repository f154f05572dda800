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

#include "advasv/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advasv/error.hpp"

namespace advasv {

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t channels, double fill)
    : frames_(frames), channels_(channels), values_(frames * channels, fill) {}

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t channels,
                             std::vector<double> values)
    : frames_(frames), channels_(channels), values_(std::move(values)) {
  if (values_.size() != frames_ * channels_) {
    throw ValidationError("feature matrix " + std::to_string(frames_) + "x" +
                          std::to_string(channels_) + " needs " +
                          std::to_string(frames_ * channels_) + " values, got " +
                          std::to_string(values_.size()));
  }
}

numcore::Tensor FeatureMatrix::ToTensor() const {
  return numcore::Tensor(numcore::Shape{frames_, channels_}, values_);
}

FeatureMatrix FeatureMatrix::FromTensor(const numcore::Tensor& t) {
  if (t.rank() != 2) {
    throw ValidationError("feature matrix needs a rank-2 tensor, got " +
                          numcore::ShapeToString(t.shape()));
  }
  return FeatureMatrix(t.rows(), t.cols(), t.storage());
}

bool FeatureMatrix::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double MaxAbsDiff(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.frames() != b.frames() || a.channels() != b.channels()) {
    throw ValidationError("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

}  // namespace advasv
