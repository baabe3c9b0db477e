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

#include "gdws/alpha.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gdws/parallel.hpp"

namespace gdws {
namespace {

using nlohmann::json;

const ConvLayer& conv_at(const Network& net, std::size_t layer_index) {
  if (layer_index >= net.layers.size()) throw ValidationError("layer index out of range");
  const auto* conv = std::get_if<ConvLayer>(&net.layers[layer_index]);
  if (!conv) {
    throw ValidationError("layer '" + layer_id(net.layers[layer_index]) +
                          "' is not a standard conv layer");
  }
  return *conv;
}

// Logits when the conv layer at `index` is replaced by `layer`, starting from
// the cached activation entering it.
Vector logits_from(const Network& net, std::size_t index, const ConvLayer& layer,
                   const FeatureMap& input) {
  FeatureMap cur = conv2d_ref(layer.weights, input, layer.bias);
  for (std::size_t i = index + 1; i < net.layers.size(); ++i) cur = apply_layer(net.layers[i], cur);
  return Eigen::Map<const Vector>(cur.data.data(), static_cast<Eigen::Index>(cur.size()));
}

struct SampleState {
  FeatureMap input;  // activation entering the layer
  LogitDiffs diffs;
};

std::vector<SampleState> prepare(const Network& net, std::span<const FeatureMap> samples,
                                 std::size_t layer_index) {
  if (samples.empty()) throw ValidationError("alpha_fd: empty sample list");
  std::vector<SampleState> states;
  states.reserve(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    auto trace = forward_trace(net, samples[s]);
    const FeatureMap& out = trace.back();
    const Vector z = Eigen::Map<const Vector>(out.data.data(), static_cast<Eigen::Index>(out.size()));
    try {
      states.push_back({std::move(trace[layer_index]), logit_diffs(z)});
    } catch (const ValidationError& e) {
      throw ValidationError("alpha_fd: sample " + std::to_string(s) + ": " + e.what());
    }
  }
  return states;
}

double channel_alpha(const Network& net, const std::vector<SampleState>& states,
                     std::size_t layer_index, ConvLayer& work, int channel,
                     const FdStep& step) {
  const ConvLayerSpec& spec = work.spec();
  const int k2 = spec.kernel_area();
  double total = 0.0;
  for (const SampleState& st : states) {
    const int n = st.diffs.predicted;
    std::vector<double> grad_sq(st.diffs.delta.size(), 0.0);
    for (int m = 0; m < spec.out_channels; ++m) {
      for (int k = 0; k < k2; ++k) {
        double& w = work.weights.data()(m, channel * k2 + k);
        const double w0 = w;
        const double h = step.for_weight(w0);
        w = w0 + h;
        const Vector up = logits_from(net, layer_index, work, st.input);
        w = w0 - h;
        const Vector down = logits_from(net, layer_index, work, st.input);
        w = w0;
        for (std::size_t j = 0; j < grad_sq.size(); ++j) {
          if (static_cast<int>(j) == n) continue;
          const double d = ((up(j) - up(n)) - (down(j) - down(n))) / (2.0 * h);
          grad_sq[j] += d * d;
        }
      }
    }
    double term = 0.0;
    for (std::size_t j = 0; j < grad_sq.size(); ++j) {
      if (static_cast<int>(j) == n) continue;
      term += grad_sq[j] / (2.0 * st.diffs.delta[j] * st.diffs.delta[j]);
    }
    total += term;
  }
  return total / static_cast<double>(states.size()) /
         (static_cast<double>(spec.out_channels) * k2);
}

}  // namespace

double FdStep::for_weight(double w) const {
  if (!relative) return value;
  return std::max(value * std::abs(w), floor);
}

LogitDiffs logit_diffs(const Vector& logits, double tie_tol) {
  if (logits.size() < 2) throw ValidationError("need at least two logits");
  LogitDiffs out;
  Eigen::Index n = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(n)) n = i;
  }
  out.predicted = static_cast<int>(n);
  out.delta.assign(static_cast<std::size_t>(logits.size()), 0.0);
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    if (j == n) continue;
    out.delta[j] = logits(j) - logits(n);
    if (std::abs(out.delta[j]) <= tie_tol) {
      throw ValidationError("logit tie between classes " + std::to_string(j) + " and " +
                            std::to_string(n));
    }
  }
  return out;
}

double alpha_fd(const Network& net, std::span<const FeatureMap> samples,
                std::size_t layer_index, int channel, const FdStep& step) {
  ConvLayer work = conv_at(net, layer_index);
  if (channel < 0 || channel >= work.spec().in_channels) {
    throw ValidationError("alpha_fd: channel out of range");
  }
  const auto states = prepare(net, samples, layer_index);
  return channel_alpha(net, states, layer_index, work, channel, step);
}

AlphaVector alpha_fd_layer(const Network& net, std::span<const FeatureMap> samples,
                           std::size_t layer_index, const FdStep& step, int threads) {
  const ConvLayer& conv = conv_at(net, layer_index);
  const auto states = prepare(net, samples, layer_index);
  AlphaVector alpha(static_cast<std::size_t>(conv.spec().in_channels), 0.0);
  parallel_for(alpha.size(), threads, [&](std::size_t c) {
    ConvLayer work = conv;
    alpha[c] = channel_alpha(net, states, layer_index, work, static_cast<int>(c), step);
  });
  return alpha;
}

AlphaFile alpha_fd_network(const Network& net, std::span<const FeatureMap> samples,
                           const FdStep& step, int threads, const std::string& input_kind) {
  if (net.variant != Variant::kStandard) {
    throw ValidationError("alpha_fd needs a standard network");
  }
  AlphaFile file;
  file.meta.sample_count = static_cast<std::int64_t>(samples.size());
  file.meta.input_kind = input_kind;
  std::ostringstream gen;
  gen << "alpha_fd central-difference step=" << step.value
      << (step.relative ? " relative floor=" : " absolute");
  if (step.relative) gen << step.floor;
  file.meta.generator = gen.str();
  for (std::size_t i : conv_layer_indices(net)) {
    file.layers[layer_id(net.layers[i])] = alpha_fd_layer(net, samples, i, step, threads);
  }
  return file;
}

AlphaFile load_alpha(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alpha file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
  try {
    if (j.at("format") != "gdws-alpha" || j.at("version") != 1) {
      throw ValidationError("'" + path + "' is not a gdws-alpha v1 file");
    }
    AlphaFile file;
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      file.meta.sample_count = m.value("sample_count", std::int64_t{0});
      file.meta.input_kind = m.value("input_kind", std::string("clean"));
      file.meta.generator = m.value("generator", std::string());
      if (file.meta.input_kind != "clean" && file.meta.input_kind != "external") {
        throw ValidationError("'" + path + "': input_kind must be clean or external");
      }
    }
    for (const auto& [id, values] : j.at("layers").items()) {
      auto alpha = values.get<AlphaVector>();
      for (double a : alpha) {
        if (!std::isfinite(a) || a < 0.0) {
          throw ValidationError("'" + path + "': layer '" + id + "' has a negative or non-finite entry");
        }
      }
      file.layers.emplace(id, std::move(alpha));
    }
    return file;
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "': malformed alpha file: " + e.what());
  }
}

void save_alpha(const AlphaFile& file, const std::string& path) {
  json j;
  j["format"] = "gdws-alpha";
  j["version"] = 1;
  j["meta"] = {{"sample_count", file.meta.sample_count},
               {"input_kind", file.meta.input_kind},
               {"generator", file.meta.generator}};
  j["layers"] = json::object();
  for (const auto& [id, alpha] : file.layers) j["layers"][id] = alpha;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write alpha file '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void check_alpha_coverage(const AlphaFile& file, const Network& net, bool include_pointwise) {
  for (std::size_t i : conv_layer_indices(net)) {
    const auto* conv = std::get_if<ConvLayer>(&net.layers[i]);
    if (!conv) continue;
    if (conv->spec().kernel == 1 && !include_pointwise) continue;
    const auto it = file.layers.find(conv->spec().id);
    if (it == file.layers.end()) {
      throw ValidationError("alpha file has no entry for layer '" + conv->spec().id + "'");
    }
    validate_alpha(it->second, conv->spec());
  }
}

}  // namespace gdws
