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

#ifndef GDWS_NETWORK_HPP_
#define GDWS_NETWORK_HPP_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gdws/conv.hpp"
#include "gdws/tensor.hpp"

namespace gdws {

struct ConvLayer {
  WeightMatrix weights;
  std::vector<double> bias;  // empty or M entries

  const ConvLayerSpec& spec() const { return weights.spec(); }
};

// A GDW stage (G depthwise KxK filters applied to channel-duplicated input)
// followed by a pointwise stage.
struct GdwsPairLayer {
  ConvLayerSpec spec;       // shape of the convolution being replaced
  std::vector<int> g;       // channel distribution, length C
  std::vector<int> dup;     // duplication map, length G
  Matrix gdw_filters;       // G x K^2, row j is the kernel of intermediate channel j
  Matrix pw_weights;        // M x G
  std::vector<double> bias; // empty or M entries

  int total_filters() const { return static_cast<int>(dup.size()); }
};

struct DenseLayer {
  std::string id;
  Matrix weights;  // out x in
  std::vector<double> bias;
};

struct ReluLayer {
  std::string id;
};
struct AvgPoolLayer {
  std::string id;
};
struct GlobalAvgPoolLayer {
  std::string id;
};

using Layer = std::variant<ConvLayer, GdwsPairLayer, DenseLayer, ReluLayer,
                           AvgPoolLayer, GlobalAvgPoolLayer>;

enum class Variant { kStandard, kGdws };

struct InputShape {
  int channels = 0;
  int height = 0;
  int width = 0;
};

struct Network {
  std::string name;
  Variant variant = Variant::kStandard;
  std::optional<InputShape> input;
  std::vector<Layer> layers;
};

const std::string& layer_id(const Layer& layer);
// "conv2d", "gdws_pair", "dense", "relu", "avgpool" or "globalavgpool".
const char* layer_type(const Layer& layer);

// Runs one layer. Pairs execute in lowered form: duplicate, depthwise,
// pointwise.
FeatureMap apply_layer(const Layer& layer, const FeatureMap& x);

// Runs every layer and flattens the final activation into logits.
Vector forward_pass(const Network& net, const FeatureMap& x);

// Activations entering each layer, plus the final output at the back.
std::vector<FeatureMap> forward_trace(const Network& net, const FeatureMap& x);

// Propagates net.input through the layers and fills input_h / input_w of
// every convolution spec. Throws ShapeError when the chain breaks.
void infer_shapes(Network& net);

// Indices of ConvLayer / GdwsPairLayer entries, in order.
std::vector<std::size_t> conv_layer_indices(const Network& net);

}  // namespace gdws

#endif  // GDWS_NETWORK_HPP_
