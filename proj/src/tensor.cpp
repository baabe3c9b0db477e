/* Copyright 2026 The GDWS Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gdws/tensor.hpp"

#include <utility>

namespace gdws {

int conv_output_dim(int input, int kernel, int stride, int padding) {
  const int span = input + 2 * padding - kernel;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

int ConvLayerSpec::output_h() const {
  if (!input_h) throw ShapeError("layer '" + id + "': input height not set");
  const int out = conv_output_dim(*input_h, kernel, stride, padding);
  if (out < 1) throw ShapeError("layer '" + id + "': empty output height");
  return out;
}

int ConvLayerSpec::output_w() const {
  if (!input_w) throw ShapeError("layer '" + id + "': input width not set");
  const int out = conv_output_dim(*input_w, kernel, stride, padding);
  if (out < 1) throw ShapeError("layer '" + id + "': empty output width");
  return out;
}

void ConvLayerSpec::validate() const {
  if (in_channels < 1 || kernel < 1 || out_channels < 1 || stride < 1 ||
      padding < 0) {
    throw ValidationError("layer '" + id + "': invalid (C, K, M, stride, padding)");
  }
  if (input_h) output_h();
  if (input_w) output_w();
}

WeightMatrix::WeightMatrix(ConvLayerSpec spec, Matrix data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  if (data_.rows() != spec_.out_channels || data_.cols() != spec_.weight_cols()) {
    throw ShapeError("layer '" + spec_.id + "': weight matrix is " +
                     std::to_string(data_.rows()) + "x" +
                     std::to_string(data_.cols()) + ", expected " +
                     std::to_string(spec_.out_channels) + "x" +
                     std::to_string(spec_.weight_cols()));
  }
}

WeightMatrix::WeightMatrix(ConvLayerSpec spec)
    : WeightMatrix(spec, Matrix::Zero(spec.out_channels, spec.weight_cols())) {}

Eigen::Block<const Matrix> WeightMatrix::channel(int c) const {
  const int k2 = spec_.kernel_area();
  return data_.block(0, c * k2, data_.rows(), k2);
}

Eigen::Block<Matrix> WeightMatrix::channel(int c) {
  const int k2 = spec_.kernel_area();
  return data_.block(0, c * k2, data_.rows(), k2);
}

Matrix concat_channels(std::span<const Matrix> blocks) {
  if (blocks.empty()) return Matrix();
  const Eigen::Index rows = blocks.front().rows();
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw ShapeError("concat_channels: row count mismatch");
    cols += b.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

FeatureMap::FeatureMap(int c, int h, int w)
    : channels(c), height(h), width(w),
      data(static_cast<std::size_t>(c) * h * w, 0.0) {
  if (c < 1 || h < 1 || w < 1) throw ShapeError("feature map dims must be positive");
}

FeatureMap::FeatureMap(int c, int h, int w, std::vector<double> values)
    : channels(c), height(h), width(w), data(std::move(values)) {
  if (c < 1 || h < 1 || w < 1) throw ShapeError("feature map dims must be positive");
  if (data.size() != static_cast<std::size_t>(c) * h * w) {
    throw ShapeError("feature map data size does not match dims");
  }
}

}  // namespace gdws
