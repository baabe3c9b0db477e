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

#include "gdws/network.hpp"

#include <type_traits>

namespace gdws {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

const std::string& layer_id(const Layer& layer) {
  return std::visit(
      Overloaded{[](const ConvLayer& l) -> const std::string& { return l.spec().id; },
                 [](const GdwsPairLayer& l) -> const std::string& { return l.spec.id; },
                 [](const auto& l) -> const std::string& { return l.id; }},
      layer);
}

const char* layer_type(const Layer& layer) {
  return std::visit(Overloaded{[](const ConvLayer&) { return "conv2d"; },
                               [](const GdwsPairLayer&) { return "gdws_pair"; },
                               [](const DenseLayer&) { return "dense"; },
                               [](const ReluLayer&) { return "relu"; },
                               [](const AvgPoolLayer&) { return "avgpool"; },
                               [](const GlobalAvgPoolLayer&) { return "globalavgpool"; }},
                    layer);
}

FeatureMap apply_layer(const Layer& layer, const FeatureMap& x) {
  return std::visit(
      Overloaded{
          [&](const ConvLayer& l) { return conv2d_ref(l.weights, x, l.bias); },
          [&](const GdwsPairLayer& l) {
            if (x.channels != l.spec.in_channels) {
              throw ShapeError("layer '" + l.spec.id + "': input channel mismatch");
            }
            const int out_h = conv_output_dim(x.height, l.spec.kernel, l.spec.stride,
                                              l.spec.padding);
            const int out_w = conv_output_dim(x.width, l.spec.kernel, l.spec.stride,
                                              l.spec.padding);
            if (out_h < 1 || out_w < 1) {
              throw ShapeError("layer '" + l.spec.id + "': input smaller than kernel");
            }
            if (l.dup.empty()) {
              // G = 0: only the bias survives.
              FeatureMap out(l.spec.out_channels, out_h, out_w);
              if (!l.bias.empty()) {
                const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
                for (int m = 0; m < out.channels; ++m) {
                  for (std::size_t p = 0; p < plane; ++p) out.data[m * plane + p] = l.bias[m];
                }
              }
              return out;
            }
            const FeatureMap expanded = duplicate_channels(x, l.dup);
            const FeatureMap mid = depthwise_conv(l.gdw_filters, expanded, l.spec.kernel,
                                                  l.spec.stride, l.spec.padding);
            return pointwise_conv(l.pw_weights, mid, l.bias);
          },
          [&](const DenseLayer& l) { return dense(l.weights, l.bias, x); },
          [&](const ReluLayer&) { return relu(x); },
          [&](const AvgPoolLayer&) { return avg_pool2x2(x); },
          [&](const GlobalAvgPoolLayer&) { return global_avg_pool(x); }},
      layer);
}

std::vector<FeatureMap> forward_trace(const Network& net, const FeatureMap& x) {
  std::vector<FeatureMap> trace;
  trace.reserve(net.layers.size() + 1);
  trace.push_back(x);
  for (const Layer& layer : net.layers) trace.push_back(apply_layer(layer, trace.back()));
  return trace;
}

Vector forward_pass(const Network& net, const FeatureMap& x) {
  FeatureMap cur = x;
  for (const Layer& layer : net.layers) cur = apply_layer(layer, cur);
  return Eigen::Map<const Vector>(cur.data.data(), static_cast<Eigen::Index>(cur.size()));
}

void infer_shapes(Network& net) {
  if (!net.input) throw ShapeError("network '" + net.name + "' has no input shape");
  int c = net.input->channels;
  int h = net.input->height;
  int w = net.input->width;
  for (Layer& layer : net.layers) {
    std::visit(
        Overloaded{
            [&](ConvLayer& l) {
              if (l.spec().in_channels != c) {
                throw ShapeError("layer '" + l.spec().id + "': expects " +
                                 std::to_string(l.spec().in_channels) +
                                 " input channels, gets " + std::to_string(c));
              }
              l.weights.set_spatial(h, w);
              const ConvLayerSpec& s = l.spec();
              h = s.output_h();
              w = s.output_w();
              c = s.out_channels;
            },
            [&](GdwsPairLayer& l) {
              if (l.spec.in_channels != c) {
                throw ShapeError("layer '" + l.spec.id + "': input channel mismatch");
              }
              l.spec.input_h = h;
              l.spec.input_w = w;
              h = l.spec.output_h();
              w = l.spec.output_w();
              c = l.spec.out_channels;
            },
            [&](DenseLayer& l) {
              if (l.weights.cols() != static_cast<Eigen::Index>(c) * h * w) {
                throw ShapeError("layer '" + l.id + "': dense input size mismatch");
              }
              c = static_cast<int>(l.weights.rows());
              h = w = 1;
            },
            [&](ReluLayer&) {},
            [&](AvgPoolLayer& l) {
              if (h < 2 || w < 2) throw ShapeError("layer '" + l.id + "': pooling below 2x2");
              h /= 2;
              w /= 2;
            },
            [&](GlobalAvgPoolLayer&) { h = w = 1; }},
        layer);
  }
}

std::vector<std::size_t> conv_layer_indices(const Network& net) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (std::holds_alternative<ConvLayer>(net.layers[i]) ||
        std::holds_alternative<GdwsPairLayer>(net.layers[i])) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace gdws
