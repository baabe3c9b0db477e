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

#ifndef GDWS_MODEL_IO_HPP_
#define GDWS_MODEL_IO_HPP_

#include <string>

#include "gdws/network.hpp"

namespace gdws {

// Model container: a JSON manifest plus one raw float32 little-endian blob.
// The blob is written next to the manifest as "<manifest stem>.bin" and
// referenced by relative path. Weights round to float32 on save.
void save_network(const Network& net, const std::string& manifest_path);
Network load_network(const std::string& manifest_path);

}  // namespace gdws

#endif  // GDWS_MODEL_IO_HPP_
