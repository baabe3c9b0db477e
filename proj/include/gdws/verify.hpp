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

#ifndef GDWS_VERIFY_HPP_
#define GDWS_VERIFY_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdws/builder.hpp"
#include "gdws/macs.hpp"
#include "gdws/network.hpp"

namespace gdws {

struct LayerReportRow {
  std::string id;
  std::string type;
  int in_channels = 0;
  int kernel = 0;
  int out_channels = 0;
  int out_h = 0;
  int out_w = 0;
  std::vector<int> g;      // empty for standard layers
  std::int64_t total = 0;  // G; C*K^2 for standard layers
  std::vector<int> ranks;  // numerical rank of each channel sub-matrix
  std::int64_t params = 0;
  std::int64_t standard_macs = 0;
  std::int64_t macs = 0;
};

struct NetworkReport {
  std::vector<LayerReportRow> layers;
  // Conv-layer totals; gdws_macs counts the layer as executed.
  MacReport totals;
  std::int64_t standard_params = 0;
  std::int64_t params = 0;
};

// Needs net.input for the MAC columns.
NetworkReport report(const Network& net);
std::string format_report(const NetworkReport& r);
nlohmann::json to_json(const NetworkReport& r);

struct LayerVerification {
  std::string id;
  std::vector<int> g;
  double predicted_error_sq = 0.0;
  double measured_weight_error_sq = 0.0;
  std::optional<double> max_output_abs_diff;
};

struct VerificationReport {
  std::vector<LayerVerification> layers;
  std::size_t probe_count = 0;
  std::optional<double> max_logit_abs_diff;
  std::optional<std::int64_t> decision_flips;
  // sum over layers of the alpha-weighted squared error; set when alphas
  // are supplied.
  std::optional<double> noise_gain_bound;
};

// Compares a gdws network with its source layer by layer and end to end.
// Without alphas, the weight errors are unweighted (alpha = 1).
VerificationReport verify_network(const Network& orig, const Network& gdws,
                                  std::span<const FeatureMap> probes,
                                  const AlphaMap* alphas = nullptr);
nlohmann::json to_json(const VerificationReport& r);

// Uniform [-1, 1) probes.
std::vector<FeatureMap> random_probes(const InputShape& shape, std::size_t count,
                                      std::uint64_t seed);

}  // namespace gdws

#endif  // GDWS_VERIFY_HPP_
