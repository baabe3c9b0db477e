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

#include "gdws/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gdws/random.hpp"
#include "gdws/svd.hpp"

namespace gdws {
namespace {

std::vector<int> ranks_of(const WeightMatrix& w) {
  std::vector<int> r;
  for (const auto& s : svd_channels(w)) r.push_back(s.rank());
  return r;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

Eigen::Index argmax(const Vector& z) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < z.size(); ++i) {
    if (z(i) > z(best)) best = i;
  }
  return best;
}

}  // namespace

NetworkReport report(const Network& net) {
  Network shaped = net;
  infer_shapes(shaped);
  NetworkReport r;
  for (const Layer& layer : shaped.layers) {
    LayerReportRow row;
    row.id = layer_id(layer);
    row.type = layer_type(layer);
    const ConvLayerSpec* spec = nullptr;
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      spec = &conv->spec();
      row.total = spec->weight_cols();
      row.ranks = ranks_of(conv->weights);
      row.params = static_cast<std::int64_t>(spec->out_channels) * spec->weight_cols() +
                   static_cast<std::int64_t>(conv->bias.size());
      row.standard_macs = macs_standard(*spec);
      row.macs = row.standard_macs;
      r.standard_params += row.params;
    } else if (const auto* pair = std::get_if<GdwsPairLayer>(&layer)) {
      spec = &pair->spec;
      row.g = pair->g;
      row.total = pair->total_filters();
      row.ranks = ranks_of(composed_weights(*pair));
      row.params = row.total * spec->kernel_area() + spec->out_channels * row.total +
                   static_cast<std::int64_t>(pair->bias.size());
      row.standard_macs = macs_standard(*spec);
      row.macs = macs_gdws(*spec, pair->g);
      r.standard_params += static_cast<std::int64_t>(spec->out_channels) * spec->weight_cols() +
                           static_cast<std::int64_t>(pair->bias.size());
    } else {
      continue;
    }
    row.in_channels = spec->in_channels;
    row.kernel = spec->kernel;
    row.out_channels = spec->out_channels;
    row.out_h = spec->output_h();
    row.out_w = spec->output_w();
    r.params += row.params;
    r.totals.standard_macs += row.standard_macs;
    r.totals.gdws_macs += row.macs;
    r.layers.push_back(std::move(row));
  }
  r.totals = make_mac_report(r.totals.standard_macs, r.totals.gdws_macs);
  return r;
}

std::string format_report(const NetworkReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-9s %5s %3s %5s %9s %7s %10s %14s %14s  %s\n", "layer",
                "type", "C", "K", "M", "out", "G", "params", "std_macs", "macs", "g / ranks");
  os << line;
  for (const auto& row : r.layers) {
    const std::string dims = std::to_string(row.out_h) + "x" + std::to_string(row.out_w);
    std::snprintf(line, sizeof(line), "%-12s %-9s %5d %3d %5d %9s %7lld %10lld %14lld %14lld  ",
                  row.id.c_str(), row.type.c_str(), row.in_channels, row.kernel,
                  row.out_channels, dims.c_str(), static_cast<long long>(row.total),
                  static_cast<long long>(row.params), static_cast<long long>(row.standard_macs),
                  static_cast<long long>(row.macs));
    os << line;
    if (!row.g.empty()) os << "g=[" << join(row.g) << "] ";
    os << "r=[" << join(row.ranks) << "]\n";
  }
  std::snprintf(line, sizeof(line),
                "total: standard_macs=%lld gdws_macs=%lld reduction=%.4fx params=%lld "
                "(standard %lld)\n",
                static_cast<long long>(r.totals.standard_macs),
                static_cast<long long>(r.totals.gdws_macs), r.totals.reduction_factor,
                static_cast<long long>(r.params), static_cast<long long>(r.standard_params));
  os << line;
  return os.str();
}

nlohmann::json to_json(const NetworkReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& row : r.layers) {
    nlohmann::json j = {{"id", row.id},         {"type", row.type},
                        {"C", row.in_channels}, {"K", row.kernel},
                        {"M", row.out_channels}, {"out_h", row.out_h},
                        {"out_w", row.out_w},   {"G", row.total},
                        {"ranks", row.ranks},   {"params", row.params},
                        {"standard_macs", row.standard_macs}, {"macs", row.macs}};
    if (!row.g.empty()) j["g"] = row.g;
    layers.push_back(std::move(j));
  }
  return {{"layers", layers},
          {"standard_macs", r.totals.standard_macs},
          {"gdws_macs", r.totals.gdws_macs},
          {"reduction_factor", r.totals.reduction_factor},
          {"standard_params", r.standard_params},
          {"params", r.params}};
}

VerificationReport verify_network(const Network& orig, const Network& gdws,
                                  std::span<const FeatureMap> probes, const AlphaMap* alphas) {
  if (orig.layers.size() != gdws.layers.size()) {
    throw ValidationError("topology mismatch: " + std::to_string(orig.layers.size()) + " vs " +
                          std::to_string(gdws.layers.size()) + " layers");
  }
  VerificationReport report;
  report.probe_count = probes.size();
  std::vector<std::size_t> conv_slots;
  double bound = 0.0;
  for (std::size_t i = 0; i < orig.layers.size(); ++i) {
    const Layer& a = orig.layers[i];
    const Layer& b = gdws.layers[i];
    if (layer_id(a) != layer_id(b)) {
      throw ValidationError("topology mismatch at layer " + std::to_string(i) + ": '" +
                            layer_id(a) + "' vs '" + layer_id(b) + "'");
    }
    const auto* conv = std::get_if<ConvLayer>(&a);
    if (!conv) {
      if (a.index() != b.index()) {
        throw ValidationError("topology mismatch: layer '" + layer_id(a) + "' changed type");
      }
      continue;
    }
    const ConvLayerSpec& spec = conv->spec();
    const AlphaVector alpha = [&] {
      if (alphas) {
        const auto it = alphas->find(spec.id);
        if (it == alphas->end()) {
          // Layers kept standard carry no error, so their weight is irrelevant.
          if (std::holds_alternative<ConvLayer>(b)) return alpha_uniform(spec.in_channels);
          throw ValidationError("no alpha vector for layer '" + spec.id + "'");
        }
        validate_alpha(it->second, spec);
        return it->second;
      }
      return alpha_uniform(spec.in_channels);
    }();

    LayerVerification lv;
    lv.id = spec.id;
    const auto svds = svd_channels(conv->weights);
    if (const auto* pair = std::get_if<GdwsPairLayer>(&b)) {
      if (pair->spec.in_channels != spec.in_channels || pair->spec.kernel != spec.kernel ||
          pair->spec.out_channels != spec.out_channels || pair->spec.stride != spec.stride ||
          pair->spec.padding != spec.padding) {
        throw ValidationError("topology mismatch: layer '" + spec.id + "' changed shape");
      }
      lv.g = pair->g;
      lv.predicted_error_sq = predicted_error_sq(svds, pair->g, alpha);
      lv.measured_weight_error_sq = weighted_error_sq(conv->weights, composed_weights(*pair), alpha);
    } else if (const auto* kept = std::get_if<ConvLayer>(&b)) {
      if (kept->weights.data().rows() != conv->weights.data().rows() ||
          kept->weights.data().cols() != conv->weights.data().cols()) {
        throw ValidationError("topology mismatch: layer '" + spec.id + "' changed shape");
      }
      for (const auto& s : svds) lv.g.push_back(s.rank());
      lv.predicted_error_sq = 0.0;
      lv.measured_weight_error_sq = weighted_error_sq(conv->weights, kept->weights, alpha);
    } else {
      throw ValidationError("topology mismatch: layer '" + spec.id + "' is not a convolution");
    }
    bound += lv.measured_weight_error_sq;
    conv_slots.push_back(i);
    report.layers.push_back(std::move(lv));
  }
  if (alphas) report.noise_gain_bound = bound;
  if (probes.empty()) return report;

  double logit_diff = 0.0;
  std::int64_t flips = 0;
  std::vector<double> layer_diff(conv_slots.size(), 0.0);
  for (const FeatureMap& x : probes) {
    const auto trace = forward_trace(orig, x);
    for (std::size_t k = 0; k < conv_slots.size(); ++k) {
      const std::size_t i = conv_slots[k];
      const FeatureMap approx = apply_layer(gdws.layers[i], trace[i]);
      const FeatureMap& ref = trace[i + 1];
      for (std::size_t e = 0; e < ref.size(); ++e) {
        layer_diff[k] = std::max(layer_diff[k], std::abs(ref.data[e] - approx.data[e]));
      }
    }
    const FeatureMap& last = trace.back();
    const Vector z0 = Eigen::Map<const Vector>(last.data.data(), static_cast<Eigen::Index>(last.size()));
    const Vector z1 = forward_pass(gdws, x);
    logit_diff = std::max(logit_diff, (z0 - z1).cwiseAbs().maxCoeff());
    if (argmax(z0) != argmax(z1)) ++flips;
  }
  for (std::size_t k = 0; k < conv_slots.size(); ++k) {
    report.layers[k].max_output_abs_diff = layer_diff[k];
  }
  report.max_logit_abs_diff = logit_diff;
  report.decision_flips = flips;
  return report;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& lv : r.layers) {
    nlohmann::json j = {{"id", lv.id},
                        {"g", lv.g},
                        {"predicted_error_sq", lv.predicted_error_sq},
                        {"measured_weight_error_sq", lv.measured_weight_error_sq}};
    j["max_output_abs_diff"] = lv.max_output_abs_diff ? nlohmann::json(*lv.max_output_abs_diff)
                                                      : nlohmann::json(nullptr);
    layers.push_back(std::move(j));
  }
  nlohmann::json j = {{"layers", layers}, {"probe_count", r.probe_count}};
  j["max_logit_abs_diff"] =
      r.max_logit_abs_diff ? nlohmann::json(*r.max_logit_abs_diff) : nlohmann::json(nullptr);
  j["decision_flips"] =
      r.decision_flips ? nlohmann::json(*r.decision_flips) : nlohmann::json(nullptr);
  j["noise_gain_bound"] =
      r.noise_gain_bound ? nlohmann::json(*r.noise_gain_bound) : nlohmann::json(nullptr);
  return j;
}

std::vector<FeatureMap> random_probes(const InputShape& shape, std::size_t count,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureMap> probes;
  probes.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    FeatureMap x(shape.channels, shape.height, shape.width);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    probes.push_back(std::move(x));
  }
  return probes;
}

}  // namespace gdws
