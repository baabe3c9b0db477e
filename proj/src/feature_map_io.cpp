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

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gdws/tensor.hpp"

namespace gdws {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

constexpr char kMagic[4] = {'G', 'D', 'W', 'T'};

}  // namespace

FeatureMap read_feature_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature map '" + path + "'");
  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not a GDWT feature map");
  }
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw IoError("'" + path + "': truncated payload");
  return FeatureMap(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                    static_cast<int>(dims[2]),
                    std::vector<double>(raw.begin(), raw.end()));
}

void write_feature_map(const FeatureMap& x, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write feature map '" + path + "'");
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(x.channels),
                                 static_cast<std::uint32_t>(x.height),
                                 static_cast<std::uint32_t>(x.width)};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> raw(x.data.begin(), x.data.end());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace gdws
