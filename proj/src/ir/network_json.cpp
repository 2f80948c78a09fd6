// Copyright 2026 The netmorph Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "netmorph/network_json.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

namespace netmorph {

using nlohmann::json;

namespace {

std::string where(const std::string& layer, std::string_view field) {
  if (layer.empty()) return "field '" + std::string(field) + "'";
  return "layer '" + layer + "': field '" + std::string(field) + "'";
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& layer) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || (key == a);
    if (!known) throw SchemaError(where(layer, key) + " is not a recognised key");
  }
}

const json& require(const json& obj, std::string_view field, const std::string& layer) {
  auto it = obj.find(std::string(field));
  if (it == obj.end()) throw SchemaError(where(layer, field) + " is missing");
  return *it;
}

std::size_t get_size(const json& obj, std::string_view field, const std::string& layer) {
  const json& v = require(obj, field, layer);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(where(layer, field) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

bool get_bool(const json& obj, std::string_view field, const std::string& layer) {
  const json& v = require(obj, field, layer);
  if (!v.is_boolean()) throw SchemaError(where(layer, field) + " must be a boolean");
  return v.get<bool>();
}

double get_number(const json& obj, std::string_view field, const std::string& layer) {
  const json& v = require(obj, field, layer);
  if (!v.is_number()) throw SchemaError(where(layer, field) + " must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, std::string_view field, const std::string& layer) {
  const json& v = require(obj, field, layer);
  if (!v.is_string()) throw SchemaError(where(layer, field) + " must be a string");
  return v.get<std::string>();
}

std::vector<LayerNode> parse_chain(const json& arr, std::string_view field,
                                   const std::string& owner);

LayerNode parse_layer(const json& obj) {
  if (!obj.is_object()) throw SchemaError("every entry of 'layers' must be an object");
  LayerNode node;
  node.name = get_string(obj, "name", {});
  const std::string& n = node.name;
  const std::string kind_text = get_string(obj, "kind", n);
  auto kind = parse_layer_kind(kind_text);
  if (!kind) throw SchemaError(where(n, "kind") + " has unknown value '" + kind_text + "'");

  switch (*kind) {
    case LayerKind::kConv2d: {
      reject_unknown_keys(obj,
                          {"name", "kind", "in_channels", "out_channels", "kernel_size",
                           "stride", "padding", "has_bias"},
                          n);
      Conv2dAttrs a;
      a.in_channels = get_size(obj, "in_channels", n);
      a.out_channels = get_size(obj, "out_channels", n);
      a.kernel_size = get_size(obj, "kernel_size", n);
      a.stride = get_size(obj, "stride", n);
      a.padding = get_size(obj, "padding", n);
      a.has_bias = get_bool(obj, "has_bias", n);
      node.attrs = a;
      break;
    }
    case LayerKind::kBatchNorm2d: {
      reject_unknown_keys(obj, {"name", "kind", "channels", "epsilon"}, n);
      node.attrs = BatchNormAttrs{get_size(obj, "channels", n), get_number(obj, "epsilon", n)};
      break;
    }
    case LayerKind::kActivation: {
      reject_unknown_keys(obj, {"name", "kind", "mode"}, n);
      const std::string mode = get_string(obj, "mode", n);
      if (mode == "relu") {
        node.attrs = ActivationAttrs{ActivationMode::kRelu};
      } else if (mode == "prelu") {
        node.attrs = ActivationAttrs{ActivationMode::kPrelu};
      } else {
        throw SchemaError(where(n, "mode") + " has unknown value '" + mode + "'");
      }
      break;
    }
    case LayerKind::kMaxPool2d: {
      reject_unknown_keys(obj, {"name", "kind", "kernel_size", "stride"}, n);
      node.attrs = MaxPoolAttrs{get_size(obj, "kernel_size", n), get_size(obj, "stride", n)};
      break;
    }
    case LayerKind::kGlobalAvgPool: {
      reject_unknown_keys(obj, {"name", "kind"}, n);
      node.attrs = GlobalAvgPoolAttrs{};
      break;
    }
    case LayerKind::kLinear: {
      reject_unknown_keys(obj, {"name", "kind", "in_features", "out_features"}, n);
      node.attrs =
          LinearAttrs{get_size(obj, "in_features", n), get_size(obj, "out_features", n)};
      break;
    }
    case LayerKind::kResidualBlock: {
      reject_unknown_keys(obj, {"name", "kind", "main", "shortcut"}, n);
      ResidualAttrs r;
      r.main = parse_chain(require(obj, "main", n), "main", n);
      r.shortcut = parse_chain(require(obj, "shortcut", n), "shortcut", n);
      node.attrs = std::move(r);
      break;
    }
  }
  return node;
}

std::vector<LayerNode> parse_chain(const json& arr, std::string_view field,
                                   const std::string& owner) {
  if (!arr.is_array()) throw SchemaError(where(owner, field) + " must be an array");
  std::vector<LayerNode> out;
  out.reserve(arr.size());
  for (const auto& obj : arr) out.push_back(parse_layer(obj));
  return out;
}

json to_json(const LayerNode& node);

json chain_to_json(const std::vector<LayerNode>& chain) {
  json arr = json::array();
  for (const auto& node : chain) arr.push_back(to_json(node));
  return arr;
}

json to_json(const LayerNode& node) {
  json obj;
  obj["name"] = node.name;
  obj["kind"] = std::string(layer_kind_name(node.kind()));
  switch (node.kind()) {
    case LayerKind::kConv2d: {
      const auto& a = node.as<Conv2dAttrs>();
      obj["in_channels"] = a.in_channels;
      obj["out_channels"] = a.out_channels;
      obj["kernel_size"] = a.kernel_size;
      obj["stride"] = a.stride;
      obj["padding"] = a.padding;
      obj["has_bias"] = a.has_bias;
      break;
    }
    case LayerKind::kBatchNorm2d:
      obj["channels"] = node.as<BatchNormAttrs>().channels;
      obj["epsilon"] = node.as<BatchNormAttrs>().epsilon;
      break;
    case LayerKind::kActivation:
      obj["mode"] = std::string(activation_mode_name(node.as<ActivationAttrs>().mode));
      break;
    case LayerKind::kMaxPool2d:
      obj["kernel_size"] = node.as<MaxPoolAttrs>().kernel_size;
      obj["stride"] = node.as<MaxPoolAttrs>().stride;
      break;
    case LayerKind::kGlobalAvgPool:
      break;
    case LayerKind::kLinear:
      obj["in_features"] = node.as<LinearAttrs>().in_features;
      obj["out_features"] = node.as<LinearAttrs>().out_features;
      break;
    case LayerKind::kResidualBlock:
      obj["main"] = chain_to_json(node.as<ResidualAttrs>().main);
      obj["shortcut"] = chain_to_json(node.as<ResidualAttrs>().shortcut);
      break;
  }
  return obj;
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("document must be a JSON object");
  reject_unknown_keys(doc, {"input_shape", "layers", "metadata"}, {});

  NetworkSpec net;
  const json& shape = require(doc, "input_shape", {});
  if (!shape.is_array() || shape.size() != 3) {
    throw SchemaError("field 'input_shape' must be an array of 3 integers");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!shape[i].is_number_integer() || shape[i].get<long long>() <= 0) {
      throw SchemaError("field 'input_shape' must hold three positive integers");
    }
    net.input_shape[i] = shape[i].get<std::size_t>();
  }
  net.layers = parse_chain(require(doc, "layers", {}), "layers", {});

  const json& meta = require(doc, "metadata", {});
  if (!meta.is_object()) throw SchemaError("field 'metadata' must be an object");
  for (const auto& [key, value] : meta.items()) {
    if (!value.is_string()) {
      throw SchemaError("metadata entry '" + key + "' must be a string");
    }
    net.metadata[key] = value.get<std::string>();
  }
  validate(net);
  return net;
}

std::string serialize_network(const NetworkSpec& net) {
  json doc;
  doc["input_shape"] = {net.input_shape[0], net.input_shape[1], net.input_shape[2]};
  doc["layers"] = chain_to_json(net.layers);
  doc["metadata"] = json::object();
  for (const auto& [k, v] : net.metadata) doc["metadata"][k] = v;
  return doc.dump(2) + "\n";
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write network file '" + path.string() + "'");
  out << serialize_network(net);
  if (!out) throw std::runtime_error("failed writing network file '" + path.string() + "'");
}

}  // namespace netmorph
