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

#include "advasv/numcore/tensor.hpp"

namespace advasv {

// T x C utterance representation (frames x channels), row-major.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t frames, std::size_t channels, double fill = 0.0);
  FeatureMatrix(std::size_t frames, std::size_t channels,
                std::vector<double> values);

  std::size_t frames() const { return frames_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t t, std::size_t c) {
    return values_[t * channels_ + c];
  }
  double operator()(std::size_t t, std::size_t c) const {
    return values_[t * channels_ + c];
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  numcore::Tensor ToTensor() const;
  static FeatureMatrix FromTensor(const numcore::Tensor& t);

  bool AllFinite() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

// Largest absolute elementwise difference; shapes must agree.
double MaxAbsDiff(const FeatureMatrix& a, const FeatureMatrix& b);

}  // namespace advasv
