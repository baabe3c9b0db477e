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

#ifndef GDWS_TENSOR_HPP_
#define GDWS_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gdws {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps each kind onto its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};
class ValidationError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Shape of one standard (C, K, M) 2D convolution with uniform stride and
// zero padding. Spatial input dims are optional; they are only needed for
// MAC accounting and execution.
struct ConvLayerSpec {
  std::string id;
  int in_channels = 1;   // C
  int kernel = 1;        // K
  int out_channels = 1;  // M
  int stride = 1;
  int padding = 0;
  std::optional<int> input_h;
  std::optional<int> input_w;

  int kernel_area() const { return kernel * kernel; }
  // Width of the weight matrix, C*K^2.
  int weight_cols() const { return in_channels * kernel_area(); }

  bool has_spatial() const { return input_h.has_value() && input_w.has_value(); }
  // Throw ShapeError when spatial dims are missing or produce an empty output.
  int output_h() const;
  int output_w() const;

  // Checks C, K, M, stride >= 1, padding >= 0 and, when present, that the
  // output is at least 1x1.
  void validate() const;
};

// Output size of a strided, zero-padded window sweep.
int conv_output_dim(int input, int kernel, int stride, int padding);

// M x CK^2 weight matrix. Column c*K^2 + k holds kernel element k (row-major
// inside the KxK window) of input channel c.
class WeightMatrix {
 public:
  WeightMatrix(ConvLayerSpec spec, Matrix data);
  // All-zero weights for `spec`.
  explicit WeightMatrix(ConvLayerSpec spec);

  const ConvLayerSpec& spec() const { return spec_; }
  void set_spatial(int h, int w) {
    spec_.input_h = h;
    spec_.input_w = w;
  }
  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }

  // M x K^2 view of the columns that belong to input channel c.
  Eigen::Block<const Matrix> channel(int c) const;
  Eigen::Block<Matrix> channel(int c);

  double operator()(int m, int col) const { return data_(m, col); }

 private:
  ConvLayerSpec spec_;
  Matrix data_;
};

// Re-assembles [W_1 | ... | W_C] from per-channel blocks.
Matrix concat_channels(std::span<const Matrix> blocks);

// channels x height x width, stored channel-major then row-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w);
  FeatureMap(int c, int h, int w, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// Little-endian float32 feature map with a 16-byte "GDWT" header.
FeatureMap read_feature_map(const std::string& path);
void write_feature_map(const FeatureMap& x, const std::string& path);

}  // namespace gdws

#endif  // GDWS_TENSOR_HPP_
