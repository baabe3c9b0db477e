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

#include "gdws/builder.hpp"

#include <cmath>
#include <optional>

#include "gdws/macs.hpp"
#include "gdws/parallel.hpp"

namespace gdws {
namespace {

void require_standard(const Network& net) {
  if (net.variant != Variant::kStandard) {
    throw ValidationError("network '" + net.name + "' is already a gdws variant");
  }
}

const AlphaVector& alpha_for(const AlphaMap& alphas, const ConvLayerSpec& spec) {
  const auto it = alphas.find(spec.id);
  if (it == alphas.end()) throw ValidationError("no alpha vector for layer '" + spec.id + "'");
  validate_alpha(it->second, spec);
  return it->second;
}

// Runs `approximate` on every conv layer with K > 1 in parallel; a returned
// nullopt keeps the layer standard.
template <class Fn>
Network rewrite_convs(const Network& net, int threads, Fn&& approximate) {
  require_standard(net);
  const auto convs = conv_layer_indices(net);
  std::vector<std::optional<GdwsDecomposition>> results(convs.size());
  parallel_for(convs.size(), threads, [&](std::size_t i) {
    const auto& conv = std::get<ConvLayer>(net.layers[convs[i]]);
    if (conv.spec().kernel == 1) return;
    results[i] = approximate(conv);
  });
  Network out = net;
  out.variant = Variant::kGdws;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    if (!results[i]) continue;
    auto& slot = out.layers[convs[i]];
    const auto& conv = std::get<ConvLayer>(slot);
    GdwsPairLayer pair = make_gdws_pair(*results[i], conv.bias);
    pair.spec = conv.spec();
    slot = std::move(pair);
  }
  return out;
}

}  // namespace

std::vector<int> lower_gdw(std::span<const int> g) {
  std::vector<int> index;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (g[c] < 0) throw ValidationError("lower_gdw: negative g entry");
    index.insert(index.end(), static_cast<std::size_t>(g[c]), static_cast<int>(c));
  }
  return index;
}

GdwsPairLayer make_gdws_pair(const GdwsDecomposition& d, std::vector<double> bias) {
  GdwsPairLayer pair;
  pair.spec = d.spec;
  pair.g = d.g;
  pair.dup = lower_gdw(d.g);
  const int k2 = d.spec.kernel_area();
  const auto total = static_cast<Eigen::Index>(pair.dup.size());
  pair.gdw_filters.resize(total, k2);
  for (Eigen::Index j = 0; j < total; ++j) {
    pair.gdw_filters.row(j) =
        d.factors.gdw.row(j).segment(static_cast<Eigen::Index>(pair.dup[j]) * k2, k2);
  }
  pair.pw_weights = d.factors.pw;
  pair.bias = std::move(bias);
  return pair;
}

Matrix expand_gdw(const GdwsPairLayer& pair) {
  const int k2 = pair.spec.kernel_area();
  Matrix gdw = Matrix::Zero(pair.total_filters(), pair.spec.weight_cols());
  for (int j = 0; j < pair.total_filters(); ++j) {
    gdw.row(j).segment(static_cast<Eigen::Index>(pair.dup[j]) * k2, k2) = pair.gdw_filters.row(j);
  }
  return gdw;
}

WeightMatrix composed_weights(const GdwsPairLayer& pair) {
  return compose(pair.pw_weights, expand_gdw(pair), pair.spec, pair.g);
}

Network build_lego_network(const Network& net, const AlphaMap& alphas, double beta,
                           const BuildOptions& options) {
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  for (const auto& [id, b] : options.beta_overrides) {
    if (!(b >= 0.0)) throw ValidationError("beta override for '" + id + "' must be >= 0");
  }
  require_standard(net);
  // Validate up front so the error names the first offending layer in order.
  for (std::size_t i : conv_layer_indices(net)) {
    const auto& conv = std::get<ConvLayer>(net.layers[i]);
    if (conv.spec().kernel > 1) alpha_for(alphas, conv.spec());
  }
  return rewrite_convs(net, options.threads, [&](const ConvLayer& conv) {
    const auto override_it = options.beta_overrides.find(conv.spec().id);
    const double layer_beta =
        override_it == options.beta_overrides.end() ? beta : override_it->second;
    return std::optional(lego(conv.weights, alpha_for(alphas, conv.spec()), layer_beta));
  });
}

std::int64_t uniform_gamma(const ConvLayerSpec& spec, double reduction_pct) {
  if (!(reduction_pct > 0.0 && reduction_pct < 100.0)) {
    throw ValidationError("reduction percentage must lie in (0, 100)");
  }
  const double target =
      (1.0 - reduction_pct / 100.0) * static_cast<double>(macs_standard(spec));
  const auto unit = static_cast<double>(macs_gdws_total(spec, 1));
  return static_cast<std::int64_t>(std::floor(target / unit));
}

Network build_mego_uniform(const Network& net, double reduction_pct,
                           const UniformOptions& options) {
  if (!(reduction_pct > 0.0 && reduction_pct < 100.0)) {
    throw ValidationError("reduction percentage must lie in (0, 100)");
  }
  require_standard(net);
  Network shaped = net;
  infer_shapes(shaped);
  return rewrite_convs(shaped, options.threads,
                       [&](const ConvLayer& conv) -> std::optional<GdwsDecomposition> {
    const ConvLayerSpec& spec = conv.spec();
    const AlphaVector ones = alpha_uniform(spec.in_channels);
    std::int64_t gamma = uniform_gamma(spec, reduction_pct);
    if (gamma < 1) {
      if (options.strict) {
        throw InfeasibleError("layer '" + spec.id + "': no GDWS form meets a " +
                              std::to_string(reduction_pct) + "% MAC reduction");
      }
      const auto svds = svd_channels(conv.weights);
      std::int64_t exact_total = 0;
      for (const auto& s : svds) exact_total += s.rank();
      if (macs_gdws_total(spec, exact_total) > macs_standard(spec)) return std::nullopt;
      gamma = 1;
    }
    return mego(conv.weights, ones, gamma);
  });
}

Network build_mego_network(const Network& net, const AlphaMap& alphas,
                           const std::map<std::string, std::int64_t>& gammas,
                           std::int64_t default_gamma, int threads) {
  require_standard(net);
  for (const auto& [id, gamma] : gammas) {
    if (gamma < 0) throw ValidationError("gamma for '" + id + "' must be >= 0");
  }
  for (std::size_t i : conv_layer_indices(net)) {
    const auto& conv = std::get<ConvLayer>(net.layers[i]);
    if (conv.spec().kernel > 1) alpha_for(alphas, conv.spec());
  }
  return rewrite_convs(net, threads,
                       [&](const ConvLayer& conv) -> std::optional<GdwsDecomposition> {
    const auto it = gammas.find(conv.spec().id);
    const std::int64_t gamma = it == gammas.end() ? default_gamma : it->second;
    if (gamma < 1) return std::nullopt;
    return mego(conv.weights, alpha_for(alphas, conv.spec()), gamma);
  });
}

}  // namespace gdws
