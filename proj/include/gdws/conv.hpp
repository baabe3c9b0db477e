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

#ifndef GDWS_CONV_HPP_
#define GDWS_CONV_HPP_

#include <span>

#include "gdws/tensor.hpp"

namespace gdws {

// Unrolls every KxKxC input window into a column. The result is
// CK^2 x H'W'; row c*K^2 + ky*K + kx matches the WeightMatrix column layout
// and column oy*W' + ox is output position (oy, ox). Out-of-bounds taps read
// zero padding.
Matrix im2col(const FeatureMap& x, const ConvLayerSpec& spec);

// Folds an M x H'W' matrix back into an M x H' x W' feature map.
FeatureMap col2im(const Matrix& y, int out_h, int out_w);

// Reference convolution Phi(W * Psi(X)) with an optional per-output bias.
// Accumulation runs over the CK^2 index in ascending order so results are
// reproducible bit for bit.
FeatureMap conv2d_ref(const WeightMatrix& w, const FeatureMap& x,
                      std::span<const double> bias = {});

// Depthwise convolution: output channel j convolves input channel j with
// filters.row(j) (a row-major KxK kernel).
FeatureMap depthwise_conv(const Matrix& filters, const FeatureMap& x,
                          int kernel, int stride, int padding);

// 1x1 convolution mixing x.channels inputs into weights.rows() outputs.
FeatureMap pointwise_conv(const Matrix& weights, const FeatureMap& x,
                          std::span<const double> bias = {});

// Replicates input channels according to `index` (output j = input index[j]).
FeatureMap duplicate_channels(const FeatureMap& x, std::span<const int> index);

FeatureMap relu(const FeatureMap& x);
// 2x2 average pool with stride 2; odd trailing rows/columns are dropped.
FeatureMap avg_pool2x2(const FeatureMap& x);
// Channels x 1 x 1.
FeatureMap global_avg_pool(const FeatureMap& x);
// Flattens x and applies weights (out x in) plus bias; result is out x 1 x 1.
FeatureMap dense(const Matrix& weights, std::span<const double> bias,
                 const FeatureMap& x);

}  // namespace gdws

#endif  // GDWS_CONV_HPP_
