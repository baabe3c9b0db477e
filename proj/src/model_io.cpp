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

#include "gdws/model_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <iterator>

#include <json.hpp>

namespace gdws {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "container formats assume a little-endian host");

class BlobWriter {
 public:
  json append(const Matrix& m) {
    const std::size_t offset = bytes_.size();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) push(m(r, c));
    }
    return {{"offset", offset}, {"len", static_cast<std::size_t>(m.size())}};
  }
  json append(const std::vector<double>& v) {
    const std::size_t offset = bytes_.size();
    for (double x : v) push(x);
    return {{"offset", offset}, {"len", v.size()}};
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  void push(double x) {
    const float f = static_cast<float>(x);
    const auto* p = reinterpret_cast<const char*>(&f);
    bytes_.insert(bytes_.end(), p, p + sizeof(float));
  }
  std::vector<char> bytes_;
};

class BlobReader {
 public:
  explicit BlobReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::vector<double> read(const json& ref, std::size_t expected, const std::string& what) const {
    const auto offset = ref.at("offset").get<std::size_t>();
    const auto len = ref.at("len").get<std::size_t>();
    if (len != expected) {
      throw ValidationError(what + ": blob entry holds " + std::to_string(len) +
                            " values, expected " + std::to_string(expected));
    }
    if (offset % sizeof(float) != 0 || offset + len * sizeof(float) > bytes_.size()) {
      throw ValidationError(what + ": blob range out of bounds");
    }
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) {
      float f;
      std::memcpy(&f, bytes_.data() + offset + i * sizeof(float), sizeof(float));
      out[i] = f;
    }
    return out;
  }

  Matrix read_matrix(const json& ref, Eigen::Index rows, Eigen::Index cols,
                     const std::string& what) const {
    const auto flat = read(ref, static_cast<std::size_t>(rows * cols), what);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
    }
    return m;
  }

 private:
  std::vector<char> bytes_;
};

void put_spec(json& j, const ConvLayerSpec& s) {
  j["id"] = s.id;
  j["C"] = s.in_channels;
  j["K"] = s.kernel;
  j["M"] = s.out_channels;
  j["stride"] = s.stride;
  j["padding"] = s.padding;
}

ConvLayerSpec get_spec(const json& j) {
  ConvLayerSpec s;
  s.id = j.at("id").get<std::string>();
  s.in_channels = j.at("C").get<int>();
  s.kernel = j.at("K").get<int>();
  s.out_channels = j.at("M").get<int>();
  s.stride = j.value("stride", 1);
  s.padding = j.value("padding", 0);
  s.validate();
  return s;
}

std::vector<double> get_bias(const json& j, const BlobReader& blob, int m,
                             const std::string& id) {
  if (!j.contains("bias") || j["bias"].is_null()) return {};
  return blob.read(j["bias"], static_cast<std::size_t>(m), "layer '" + id + "' bias");
}

json layer_to_json(const Layer& layer, BlobWriter& blob) {
  json j;
  j["type"] = layer_type(layer);
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    put_spec(j, conv->spec());
    j["weights"] = blob.append(conv->weights.data());
    if (!conv->bias.empty()) j["bias"] = blob.append(conv->bias);
  } else if (const auto* pair = std::get_if<GdwsPairLayer>(&layer)) {
    put_spec(j, pair->spec);
    j["g"] = pair->g;
    j["dup"] = pair->dup;
    j["gdw_weights"] = blob.append(pair->gdw_filters);
    j["pw_weights"] = blob.append(pair->pw_weights);
    if (!pair->bias.empty()) j["bias"] = blob.append(pair->bias);
  } else if (const auto* fc = std::get_if<DenseLayer>(&layer)) {
    j["id"] = fc->id;
    j["in"] = fc->weights.cols();
    j["out"] = fc->weights.rows();
    j["weights"] = blob.append(fc->weights);
    if (!fc->bias.empty()) j["bias"] = blob.append(fc->bias);
  } else {
    j["id"] = layer_id(layer);
  }
  return j;
}

Layer layer_from_json(const json& j, const BlobReader& blob) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv2d") {
    ConvLayerSpec spec = get_spec(j);
    const std::string what = "layer '" + spec.id + "' weights";
    Matrix w = blob.read_matrix(j.at("weights"), spec.out_channels, spec.weight_cols(), what);
    auto bias = get_bias(j, blob, spec.out_channels, spec.id);
    return ConvLayer{WeightMatrix(std::move(spec), std::move(w)), std::move(bias)};
  }
  if (type == "gdws_pair") {
    GdwsPairLayer pair;
    pair.spec = get_spec(j);
    pair.g = j.at("g").get<std::vector<int>>();
    pair.dup = j.at("dup").get<std::vector<int>>();
    const std::string& id = pair.spec.id;
    if (pair.g.size() != static_cast<std::size_t>(pair.spec.in_channels)) {
      throw ValidationError("layer '" + id + "': g has wrong length");
    }
    // dup must be the expansion of g: channel c repeated g_c times, in order.
    std::vector<int> expected;
    for (int c = 0; c < pair.spec.in_channels; ++c) {
      if (pair.g[c] < 0) throw ValidationError("layer '" + id + "': negative g entry");
      expected.insert(expected.end(), pair.g[c], c);
    }
    if (expected != pair.dup) {
      throw ValidationError("layer '" + id + "': dup does not match g");
    }
    const auto total = static_cast<Eigen::Index>(pair.dup.size());
    pair.gdw_filters = blob.read_matrix(j.at("gdw_weights"), total, pair.spec.kernel_area(),
                                        "layer '" + id + "' gdw_weights");
    pair.pw_weights = blob.read_matrix(j.at("pw_weights"), pair.spec.out_channels, total,
                                       "layer '" + id + "' pw_weights");
    pair.bias = get_bias(j, blob, pair.spec.out_channels, id);
    return pair;
  }
  const auto id = j.at("id").get<std::string>();
  if (type == "dense") {
    const int in = j.at("in").get<int>();
    const int out = j.at("out").get<int>();
    if (in < 1 || out < 1) throw ValidationError("layer '" + id + "': invalid dense shape");
    DenseLayer fc{id, blob.read_matrix(j.at("weights"), out, in, "layer '" + id + "' weights"),
                  get_bias(j, blob, out, id)};
    return fc;
  }
  if (type == "relu") return ReluLayer{id};
  if (type == "avgpool") return AvgPoolLayer{id};
  if (type == "globalavgpool") return GlobalAvgPoolLayer{id};
  throw ValidationError("layer '" + id + "': unsupported layer type '" + type + "'");
}

}  // namespace

void save_network(const Network& net, const std::string& manifest_path) {
  const fs::path manifest(manifest_path);
  const fs::path blob_name = manifest.stem().string() + ".bin";
  BlobWriter blob;
  json j;
  j["format"] = "gdws-model";
  j["version"] = 1;
  j["name"] = net.name;
  j["variant"] = net.variant == Variant::kGdws ? "gdws" : "standard";
  j["blob"] = blob_name.string();
  if (net.input) {
    j["input"] = {{"C", net.input->channels}, {"H", net.input->height}, {"W", net.input->width}};
  }
  j["layers"] = json::array();
  for (const Layer& layer : net.layers) j["layers"].push_back(layer_to_json(layer, blob));

  const fs::path blob_path = manifest.parent_path() / blob_name;
  std::ofstream bout(blob_path, std::ios::binary | std::ios::trunc);
  if (!bout) throw IoError("cannot write blob '" + blob_path.string() + "'");
  bout.write(blob.bytes().data(), static_cast<std::streamsize>(blob.bytes().size()));
  if (!bout) throw IoError("failed writing '" + blob_path.string() + "'");

  std::ofstream mout(manifest, std::ios::trunc);
  if (!mout) throw IoError("cannot write manifest '" + manifest_path + "'");
  mout << j.dump(2) << '\n';
  if (!mout) throw IoError("failed writing '" + manifest_path + "'");
}

Network load_network(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + manifest_path + "': " + e.what());
  }
  try {
    if (j.at("format") != "gdws-model" || j.at("version") != 1) {
      throw ValidationError("'" + manifest_path + "' is not a gdws-model v1 manifest");
    }
    const fs::path blob_path =
        fs::path(manifest_path).parent_path() / j.at("blob").get<std::string>();
    std::ifstream bin(blob_path, std::ios::binary);
    if (!bin) throw IoError("cannot open blob '" + blob_path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(bin)),
                            std::istreambuf_iterator<char>());
    const BlobReader blob(std::move(bytes));

    Network net;
    net.name = j.value("name", fs::path(manifest_path).stem().string());
    const auto variant = j.value("variant", std::string("standard"));
    if (variant == "standard") {
      net.variant = Variant::kStandard;
    } else if (variant == "gdws") {
      net.variant = Variant::kGdws;
    } else {
      throw ValidationError("unknown variant '" + variant + "'");
    }
    if (j.contains("input")) {
      const auto& s = j["input"];
      net.input = InputShape{s.at("C").get<int>(), s.at("H").get<int>(), s.at("W").get<int>()};
    }
    for (const auto& lj : j.at("layers")) {
      net.layers.push_back(layer_from_json(lj, blob));
      if (net.variant == Variant::kStandard &&
          std::holds_alternative<GdwsPairLayer>(net.layers.back())) {
        throw ValidationError("standard manifest contains a gdws_pair layer");
      }
    }
    if (net.input) infer_shapes(net);
    return net;
  } catch (const json::exception& e) {
    throw ValidationError("'" + manifest_path + "': malformed manifest: " + e.what());
  }
}

}  // namespace gdws
