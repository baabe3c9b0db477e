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

#ifndef GDWS_BUILDER_HPP_
#define GDWS_BUILDER_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gdws/approx.hpp"
#include "gdws/network.hpp"

namespace gdws {

// Per-layer alpha vectors keyed by conv layer id.
using AlphaMap = std::map<std::string, AlphaVector>;

// Channel c repeated g_c times, in channel order. Running a depthwise
// convolution on the duplicated input realizes the GDW stage.
std::vector<int> lower_gdw(std::span<const int> g);

// Packs a decomposition into its executable lowered form.
GdwsPairLayer make_gdws_pair(const GdwsDecomposition& d, std::vector<double> bias);

// Rebuilds the block-structured G x CK^2 matrix from a pair's filter bank.
Matrix expand_gdw(const GdwsPairLayer& pair);

// W_hat = pw * gdw of a pair.
WeightMatrix composed_weights(const GdwsPairLayer& pair);

struct BuildOptions {
  int threads = 1;
  // Expert override of the shared budget for individual layers.
  std::map<std::string, double> beta_overrides;
};

// Replaces every conv layer with K > 1 by lego(W, alpha_l, beta). Layers
// with K = 1 stay standard; other layers and all biases pass through.
Network build_lego_network(const Network& net, const AlphaMap& alphas, double beta,
                           const BuildOptions& options = {});

// Largest gamma with macs_gdws(gamma) <= (1 - pct / 100) * macs_standard.
// May be 0.
std::int64_t uniform_gamma(const ConvLayerSpec& spec, double reduction_pct);

struct UniformOptions {
  int threads = 1;
  // Throw InfeasibleError instead of falling back when a layer cannot meet
  // the MAC target.
  bool strict = false;
};

// Uniform MAC reduction with unweighted error: each conv layer gets
// mego(W, 1, gamma_l) with gamma_l = uniform_gamma(spec, pct). When gamma_l
// is 0 the layer gets gamma = 1, unless even the exact GDWS form costs more
// than the standard convolution, in which case it stays standard. Requires
// net.input so spatial dims are known.
Network build_mego_uniform(const Network& net, double reduction_pct,
                           const UniformOptions& options = {});

// Per-layer mego with explicit budgets keyed by layer id. Layers missing
// from `gammas` use `default_gamma` (0 = keep standard).
Network build_mego_network(const Network& net, const AlphaMap& alphas,
                           const std::map<std::string, std::int64_t>& gammas,
                           std::int64_t default_gamma, int threads = 1);

}  // namespace gdws

#endif  // GDWS_BUILDER_HPP_
