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

#ifndef GDWS_ALPHA_HPP_
#define GDWS_ALPHA_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gdws/approx.hpp"
#include "gdws/builder.hpp"
#include "gdws/network.hpp"

namespace gdws {

struct AlphaMeta {
  std::int64_t sample_count = 0;
  std::string input_kind = "clean";  // "clean" or "external"
  std::string generator;
};

struct AlphaFile {
  AlphaMap layers;
  AlphaMeta meta;
};

// JSON {"format":"gdws-alpha","version":1,"meta":{...},"layers":{id: [...]}}.
// Loading rejects negative or non-finite entries.
AlphaFile load_alpha(const std::string& path);
void save_alpha(const AlphaFile& file, const std::string& path);

// Every conv layer of `net` (K > 1 unless include_pointwise) must have a
// vector of length C. Throws ValidationError naming the first bad layer.
void check_alpha_coverage(const AlphaFile& file, const Network& net,
                          bool include_pointwise = false);

// Soft-output differences delta_j = z_j - z_n for the predicted class n.
struct LogitDiffs {
  int predicted = 0;
  // Indexed by class; entry `predicted` is unused and stays 0.
  std::vector<double> delta;
};

// Throws ValidationError when some |delta_j| <= tie_tol for j != n.
LogitDiffs logit_diffs(const Vector& logits, double tie_tol = 1e-12);

// Central-difference step. Relative steps scale with |w| and never drop
// below `floor`; absolute steps use `value` as is.
struct FdStep {
  double value = 1e-3;
  bool relative = true;
  double floor = 1e-5;

  double for_weight(double w) const;
};

// Finite-difference estimate of the per-channel sensitivity
//   alpha_c = 1/(M K^2) * mean_x sum_{j != n_x} ||D_{x,j}||_F^2 / (2 delta_{x,j}^2)
// where D_{x,j} is the derivative of delta_{x,j} with respect to W_c of the
// conv layer at `layer_index`. Each derivative entry comes from
// (delta(w + h) - delta(w - h)) / (2h).
double alpha_fd(const Network& net, std::span<const FeatureMap> samples,
                std::size_t layer_index, int channel, const FdStep& step = {});

// All channels of one conv layer; per-channel work runs on `threads` workers.
AlphaVector alpha_fd_layer(const Network& net, std::span<const FeatureMap> samples,
                           std::size_t layer_index, const FdStep& step = {}, int threads = 1);

// Every conv layer of a standard network.
AlphaFile alpha_fd_network(const Network& net, std::span<const FeatureMap> samples,
                           const FdStep& step = {}, int threads = 1,
                           const std::string& input_kind = "clean");

}  // namespace gdws

#endif  // GDWS_ALPHA_HPP_
