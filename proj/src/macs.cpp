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

#include "gdws/macs.hpp"

#include <numeric>

namespace gdws {

std::int64_t macs_standard(const ConvLayerSpec& spec) {
  const std::int64_t positions =
      static_cast<std::int64_t>(spec.output_h()) * spec.output_w();
  return positions * spec.out_channels * spec.in_channels * spec.kernel_area();
}

std::int64_t macs_gdws(const ConvLayerSpec& spec, std::span<const int> g) {
  if (g.size() != static_cast<std::size_t>(spec.in_channels)) {
    throw ShapeError("layer '" + spec.id + "': channel distribution has " +
                     std::to_string(g.size()) + " entries, expected " +
                     std::to_string(spec.in_channels));
  }
  const std::int64_t total = std::accumulate(g.begin(), g.end(), std::int64_t{0});
  return macs_gdws_total(spec, total);
}

std::int64_t macs_gdws_total(const ConvLayerSpec& spec, std::int64_t total) {
  const std::int64_t positions =
      static_cast<std::int64_t>(spec.output_h()) * spec.output_w();
  return positions * total * (spec.kernel_area() + spec.out_channels);
}

MacReport make_mac_report(std::int64_t standard_macs, std::int64_t gdws_macs) {
  MacReport r{standard_macs, gdws_macs, 0.0};
  if (gdws_macs > 0) {
    r.reduction_factor = static_cast<double>(standard_macs) / static_cast<double>(gdws_macs);
  }
  return r;
}

}  // namespace gdws
