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

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "netmorph/io.hpp"
#include "netmorph/network_json.hpp"

namespace netmorph {

using nlohmann::json;

namespace {

constexpr std::size_t kPreamble = sizeof(kWeightsMagic) + 1 + 8;

std::size_t element_size(DType d) { return d == DType::kF32 ? 4 : 8; }

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightsStore& weights) {
  json manifest = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : weights) {
    const std::uint64_t length = t.size() * element_size(t.dtype());
    manifest[name] = {{"dtype", std::string(dtype_name(t.dtype()))},
                      {"shape", t.shape()},
                      {"offset", offset},
                      {"length", length}};
    offset += length;
  }
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kWeightsMagic), std::end(kWeightsMagic));
  out.push_back(kWeightsVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, t] : weights) {
    for (double v : t.data()) {
      if (t.dtype() == DType::kF32) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
      } else {
        put_u64(out, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  return out;
}

WeightsStore decode_weights(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kPreamble ||
      !std::equal(std::begin(kWeightsMagic), std::end(kWeightsMagic), bytes.begin())) {
    throw FormatError("not a weights container (bad magic)");
  }
  if (bytes[8] != kWeightsVersion) {
    throw FormatError("unsupported weights container version " + std::to_string(bytes[8]));
  }
  const std::uint64_t manifest_len = get_u64(bytes.data() + 9, 8);
  if (manifest_len > bytes.size() - kPreamble) throw FormatError("truncated manifest");
  const std::size_t blob_start = kPreamble + manifest_len;
  const std::size_t blob_size = bytes.size() - blob_start;

  json manifest;
  try {
    manifest = json::parse(bytes.begin() + kPreamble, bytes.begin() + blob_start);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  if (!manifest.is_object()) throw FormatError("manifest must be a JSON object");

  WeightsStore out;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
  for (const auto& [name, entry] : manifest.items()) {
    DType dtype;
    Shape shape;
    std::uint64_t offset = 0, length = 0;
    try {
      dtype = parse_dtype(entry.at("dtype").get<std::string>());
      shape = entry.at("shape").get<Shape>();
      offset = entry.at("offset").get<std::uint64_t>();
      length = entry.at("length").get<std::uint64_t>();
    } catch (const std::exception& e) {
      throw FormatError("bad manifest entry '" + name + "': " + e.what());
    }
    const std::size_t es = element_size(dtype);
    if (length != shape_numel(shape) * es) {
      throw FormatError("entry '" + name + "' length " + std::to_string(length) +
                        " does not match shape " + shape_to_string(shape));
    }
    if (offset > blob_size || length > blob_size - offset) {
      throw FormatError("entry '" + name + "' lies outside the blob");
    }
    extents.emplace_back(offset, length);

    std::vector<double> data(shape_numel(shape));
    const std::uint8_t* p = bytes.data() + blob_start + offset;
    for (std::size_t i = 0; i < data.size(); ++i, p += es) {
      if (dtype == DType::kF32) {
        data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_u64(p, 4)));
      } else {
        data[i] = std::bit_cast<double>(get_u64(p, 8));
      }
    }
    out.emplace(name, Tensor(std::move(shape), std::move(data), dtype));
  }

  std::sort(extents.begin(), extents.end());
  std::uint64_t end = 0;
  for (const auto& [offset, length] : extents) {
    if (offset < end) throw FormatError("manifest entries overlap");
    end = offset + length;
  }
  if (end != blob_size) throw FormatError("blob has trailing bytes");
  return out;
}

void write_weights(const std::filesystem::path& path, const WeightsStore& weights) {
  const auto bytes = encode_weights(weights);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

WeightsStore read_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

std::filesystem::path spec_path(const std::filesystem::path& base) {
  return base.string() + ".json";
}

std::filesystem::path weights_path(const std::filesystem::path& base) {
  return base.string() + ".weights";
}

Model load_model(const std::filesystem::path& base) {
  Model m{load_network(spec_path(base)), read_weights(weights_path(base))};
  validate_weights(m.net, m.weights);
  return m;
}

void save_model(const std::filesystem::path& base, const Model& model) {
  validate(model.net);
  validate_weights(model.net, model.weights);
  save_network(model.net, spec_path(base));
  write_weights(weights_path(base), model.weights);
}

}  // namespace netmorph
