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

#include "gdws/conv.hpp"

#include <algorithm>

namespace gdws {
namespace {

void check_input(const FeatureMap& x, const ConvLayerSpec& spec) {
  if (x.channels != spec.in_channels) {
    throw ShapeError("layer '" + spec.id + "': input has " +
                     std::to_string(x.channels) + " channels, expected " +
                     std::to_string(spec.in_channels));
  }
  if ((spec.input_h && *spec.input_h != x.height) ||
      (spec.input_w && *spec.input_w != x.width)) {
    throw ShapeError("layer '" + spec.id + "': input spatial dims mismatch");
  }
  if (conv_output_dim(x.height, spec.kernel, spec.stride, spec.padding) < 1 ||
      conv_output_dim(x.width, spec.kernel, spec.stride, spec.padding) < 1) {
    throw ShapeError("layer '" + spec.id + "': input smaller than kernel");
  }
}

}  // namespace

Matrix im2col(const FeatureMap& x, const ConvLayerSpec& spec) {
  check_input(x, spec);
  const int k = spec.kernel;
  const int out_h = conv_output_dim(x.height, k, spec.stride, spec.padding);
  const int out_w = conv_output_dim(x.width, k, spec.stride, spec.padding);
  Matrix cols = Matrix::Zero(spec.weight_cols(), out_h * out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const int p = oy * out_w + ox;
      for (int c = 0; c < x.channels; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * spec.stride - spec.padding + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * spec.stride - spec.padding + kx;
            if (ix < 0 || ix >= x.width) continue;
            cols((c * k + ky) * k + kx, p) = x.at(c, iy, ix);
          }
        }
      }
    }
  }
  return cols;
}

FeatureMap col2im(const Matrix& y, int out_h, int out_w) {
  if (y.cols() != static_cast<Eigen::Index>(out_h) * out_w) {
    throw ShapeError("col2im: column count does not match output dims");
  }
  FeatureMap out(static_cast<int>(y.rows()), out_h, out_w);
  for (int m = 0; m < y.rows(); ++m) {
    for (int p = 0; p < y.cols(); ++p) out.at(m, p / out_w, p % out_w) = y(m, p);
  }
  return out;
}

FeatureMap conv2d_ref(const WeightMatrix& w, const FeatureMap& x,
                      std::span<const double> bias) {
  const ConvLayerSpec& spec = w.spec();
  const Matrix cols = im2col(x, spec);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(spec.out_channels)) {
    throw ShapeError("layer '" + spec.id + "': bias length mismatch");
  }
  const int out_h = conv_output_dim(x.height, spec.kernel, spec.stride, spec.padding);
  const int out_w = conv_output_dim(x.width, spec.kernel, spec.stride, spec.padding);
  const Matrix& wd = w.data();
  Matrix y(spec.out_channels, cols.cols());
  for (Eigen::Index p = 0; p < cols.cols(); ++p) {
    for (Eigen::Index m = 0; m < wd.rows(); ++m) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < wd.cols(); ++k) acc += wd(m, k) * cols(k, p);
      y(m, p) = bias.empty() ? acc : acc + bias[m];
    }
  }
  return col2im(y, out_h, out_w);
}

FeatureMap depthwise_conv(const Matrix& filters, const FeatureMap& x,
                          int kernel, int stride, int padding) {
  if (filters.rows() != x.channels || filters.cols() != kernel * kernel) {
    throw ShapeError("depthwise_conv: filter bank does not match input");
  }
  const int out_h = conv_output_dim(x.height, kernel, stride, padding);
  const int out_w = conv_output_dim(x.width, kernel, stride, padding);
  if (out_h < 1 || out_w < 1) throw ShapeError("depthwise_conv: input smaller than kernel");
  FeatureMap out(x.channels, out_h, out_w);
  for (int c = 0; c < x.channels; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = 0.0;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= x.width) continue;
            acc += filters(c, ky * kernel + kx) * x.at(c, iy, ix);
          }
        }
        out.at(c, oy, ox) = acc;
      }
    }
  }
  return out;
}

FeatureMap pointwise_conv(const Matrix& weights, const FeatureMap& x,
                          std::span<const double> bias) {
  if (weights.cols() != x.channels) {
    throw ShapeError("pointwise_conv: weight columns do not match input channels");
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(weights.rows())) {
    throw ShapeError("pointwise_conv: bias length mismatch");
  }
  FeatureMap out(static_cast<int>(weights.rows()), x.height, x.width);
  const int plane = x.height * x.width;
  for (int m = 0; m < weights.rows(); ++m) {
    for (int p = 0; p < plane; ++p) {
      double acc = 0.0;
      for (int g = 0; g < x.channels; ++g) {
        acc += weights(m, g) * x.data[static_cast<std::size_t>(g) * plane + p];
      }
      out.data[static_cast<std::size_t>(m) * plane + p] =
          bias.empty() ? acc : acc + bias[m];
    }
  }
  return out;
}

FeatureMap duplicate_channels(const FeatureMap& x, std::span<const int> index) {
  if (index.empty()) throw ShapeError("duplicate_channels: empty index");
  FeatureMap out(static_cast<int>(index.size()), x.height, x.width);
  const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] < 0 || index[j] >= x.channels) {
      throw ShapeError("duplicate_channels: source channel out of range");
    }
    std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(index[j] * plane), plane,
                out.data.begin() + static_cast<std::ptrdiff_t>(j * plane));
  }
  return out;
}

FeatureMap relu(const FeatureMap& x) {
  FeatureMap out = x;
  for (double& v : out.data) v = std::max(v, 0.0);
  return out;
}

FeatureMap avg_pool2x2(const FeatureMap& x) {
  if (x.height < 2 || x.width < 2) throw ShapeError("avg_pool2x2: input smaller than 2x2");
  FeatureMap out(x.channels, x.height / 2, x.width / 2);
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int xx = 0; xx < out.width; ++xx) {
        out.at(c, y, xx) = 0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                   x.at(c, 2 * y + 1, 2 * xx) +
                                   x.at(c, 2 * y + 1, 2 * xx + 1));
      }
    }
  }
  return out;
}

FeatureMap global_avg_pool(const FeatureMap& x) {
  FeatureMap out(x.channels, 1, 1);
  const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) acc += x.data[c * plane + p];
    out.data[c] = acc / static_cast<double>(plane);
  }
  return out;
}

FeatureMap dense(const Matrix& weights, std::span<const double> bias,
                 const FeatureMap& x) {
  if (weights.cols() != static_cast<Eigen::Index>(x.size())) {
    throw ShapeError("dense: expected " + std::to_string(weights.cols()) +
                     " inputs, got " + std::to_string(x.size()));
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(weights.rows())) {
    throw ShapeError("dense: bias length mismatch");
  }
  FeatureMap out(static_cast<int>(weights.rows()), 1, 1);
  for (int o = 0; o < weights.rows(); ++o) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.cols(); ++i) acc += weights(o, i) * x.data[i];
    out.data[o] = bias.empty() ? acc : acc + bias[o];
  }
  return out;
}

}  // namespace gdws
