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

#ifndef GDWS_MACS_HPP_
#define GDWS_MACS_HPP_

#include <cstdint>
#include <span>

#include "gdws/tensor.hpp"

namespace gdws {

struct MacReport {
  std::int64_t standard_macs = 0;
  std::int64_t gdws_macs = 0;
  // standard / gdws; 0 when gdws_macs is 0.
  double reduction_factor = 0.0;
};

// H'W' * M * C * K^2.
std::int64_t macs_standard(const ConvLayerSpec& spec);

// H'W' * G * (K^2 + M) with G = sum(g). Requires g.size() == C.
std::int64_t macs_gdws(const ConvLayerSpec& spec, std::span<const int> g);

// Same, for a total filter count G.
std::int64_t macs_gdws_total(const ConvLayerSpec& spec, std::int64_t total);

MacReport make_mac_report(std::int64_t standard_macs, std::int64_t gdws_macs);

}  // namespace gdws

#endif  // GDWS_MACS_HPP_
