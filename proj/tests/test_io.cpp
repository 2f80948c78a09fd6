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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "json.hpp"
#include "netmorph/io.hpp"
#include "netmorph/network_json.hpp"
#include "netmorph/shape_inference.hpp"
#include "test_support.hpp"

namespace netmorph {
namespace {

using testing::random_tensor;
using testing::TempDir;

// Assembles a container by hand from a manifest and a blob.
std::vector<std::uint8_t> container(const std::string& manifest,
                                    const std::vector<std::uint8_t>& blob,
                                    std::uint8_t version = 1) {
  std::vector<std::uint8_t> out = {'N', 'E', 'T', 'M', 'W', 'T', 'S', 0, version};
  const std::uint64_t n = manifest.size();
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(n >> (8 * i)));
  out.insert(out.end(), manifest.begin(), manifest.end());
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

TEST(WeightsContainer, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(1);
  WeightsStore w;
  w["a.weight"] = random_tensor({4, 3, 3, 3}, rng, DType::kF32);
  w["b.bias"] = random_tensor({7}, rng, DType::kF64);
  w["c.slope"] = Tensor::scalar(-0.0, DType::kF32);
  w["empty"] = Tensor({0, 3});
  const auto bytes = encode_weights(w);
  const WeightsStore back = decode_weights(bytes);
  EXPECT_EQ(back, w);
  EXPECT_EQ(encode_weights(back), bytes);
  EXPECT_TRUE(std::signbit(back.at("c.slope")[0]));

  TempDir dir;
  write_weights(dir / "w.weights", w);
  EXPECT_EQ(read_weights(dir / "w.weights"), w);
}

TEST(WeightsContainer, LittleEndianLayout) {
  WeightsStore w;
  w["x"] = Tensor({1}, {1.0}, DType::kF64);
  w["y"] = Tensor({1}, {1.0}, DType::kF32);
  const auto bytes = encode_weights(w);
  ASSERT_EQ(std::memcmp(bytes.data(), "NETMWTS\0", 8), 0);
  EXPECT_EQ(bytes[8], 1);
  const std::vector<std::uint8_t> tail(bytes.end() - 12, bytes.end());
  EXPECT_EQ(tail, (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0xF0, 0x3F, 0, 0, 0x80, 0x3F}));
  std::uint64_t mlen = 0;
  for (int i = 0; i < 8; ++i) mlen |= std::uint64_t(bytes[9 + i]) << (8 * i);
  const auto manifest = nlohmann::json::parse(bytes.begin() + 17, bytes.begin() + 17 + long(mlen));
  EXPECT_EQ(manifest["x"]["offset"], 0);
  EXPECT_EQ(manifest["x"]["length"], 8);
  EXPECT_EQ(manifest["y"]["dtype"], "f32");
  EXPECT_EQ(manifest["y"]["offset"], 8);
}

TEST(WeightsContainer, RejectsMalformedInput) {
  const std::vector<std::uint8_t> eight(8, 0);
  const std::string ok = R"({"a":{"dtype":"f64","shape":[1],"offset":0,"length":8}})";
  EXPECT_NO_THROW(decode_weights(container(ok, eight)));

  auto bad_magic = container(ok, eight);
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_weights(bad_magic), FormatError);
  EXPECT_THROW(decode_weights(container(ok, eight, 2)), FormatError);
  EXPECT_THROW(decode_weights({'N', 'E', 'T'}), FormatError);
  auto truncated = container(ok, eight);
  truncated.resize(30);
  EXPECT_THROW(decode_weights(truncated), FormatError);
  EXPECT_THROW(decode_weights(container("{not json", eight)), FormatError);
  EXPECT_THROW(decode_weights(container(ok, std::vector<std::uint8_t>(4))), FormatError);
  EXPECT_THROW(decode_weights(container(ok, std::vector<std::uint8_t>(9))), FormatError);
  EXPECT_THROW(
      decode_weights(container(R"({"a":{"dtype":"f64","shape":[2],"offset":0,"length":8}})",
                               eight)),
      FormatError);
  EXPECT_THROW(
      decode_weights(container(R"({"a":{"dtype":"f16","shape":[1],"offset":0,"length":8}})",
                               eight)),
      FormatError);
  EXPECT_THROW(decode_weights(container(
                   R"({"a":{"dtype":"f32","shape":[1],"offset":0,"length":4},)"
                   R"("b":{"dtype":"f32","shape":[1],"offset":2,"length":4}})",
                   std::vector<std::uint8_t>(6))),
               FormatError);
  EXPECT_THROW(
      decode_weights(container(
          R"({"a":{"dtype":"f64","shape":[1],"offset":18446744073709551615,"length":8}})",
          eight)),
      FormatError);
}

TEST(Templates, ResnetShapes) {
  const NetworkSpec net = resnet18_like(2);
  EXPECT_EQ(net.input_shape, (Chw{3, 224, 224}));
  EXPECT_EQ(output_shape(net, net.input_shape), (Shape{2}));
  EXPECT_EQ(net.layers.front().name, "conv1");
  EXPECT_EQ(net.layers.back().name, "fc");
  EXPECT_EQ(output_shape(resnet18_like(5), {3, 224, 224}), (Shape{5}));
}

TEST(Templates, TinyConvHasThreeConvolutions) {
  const NetworkSpec net = tiny_conv(2);
  std::size_t convs = 0;
  for_each_layer(net.layers, [&](const LayerNode& n) { convs += n.kind() == LayerKind::kConv2d; });
  EXPECT_EQ(convs, 3u);
  EXPECT_EQ(output_shape(net, net.input_shape), (Shape{2, 32, 32}));
  EXPECT_THROW(make_template("vgg", 2), std::invalid_argument);
}

TEST(Templates, InitialisationIsSeededAndScaled) {
  const NetworkSpec net = resnet18_like(2);
  const WeightsStore a = init_weights(net, 9);
  EXPECT_EQ(encode_weights(a), encode_weights(init_weights(net, 9)));
  EXPECT_NE(encode_weights(a), encode_weights(init_weights(net, 10)));
  EXPECT_NO_THROW(validate_weights(net, a));
  for (double v : a.at("fc.weight").data()) EXPECT_EQ(v, 0.0);
  for (double v : a.at("fc.bias").data()) EXPECT_EQ(v, 0.0);

  // He scaling: variance 2 / fan_in.
  const Tensor& k = a.at("layer4_1_conv2.weight");
  double ss = 0.0;
  for (double v : k.data()) ss += v * v;
  const double var = ss / double(k.size());
  EXPECT_NEAR(var / (2.0 / (512.0 * 9.0)), 1.0, 0.02);
  for (double v : a.at("bn1.running_var").data()) EXPECT_GE(v, 1.0);
  EXPECT_EQ(a.at("conv1.weight").dtype(), DType::kF32);
  EXPECT_EQ(init_weights(net, 9, DType::kF64).at("conv1.weight").dtype(), DType::kF64);
}

TEST(Models, SaveAndLoad) {
  TempDir dir;
  const NetworkSpec net = tiny_conv(3);
  const Model m{net, init_weights(net, 2)};
  save_model(dir / "tiny", m);
  const Model back = load_model(dir / "tiny");
  EXPECT_EQ(back.net, m.net);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_THROW(save_model(dir / "missing/dir/tiny", m), std::runtime_error);
  EXPECT_THROW(load_model(dir / "absent"), std::runtime_error);
  WeightsStore broken = m.weights;
  broken.erase("conv1.bias");
  EXPECT_THROW(save_model(dir / "broken", {net, broken}), SchemaError);
}

TEST(Truncate, KeepsPrefix) {
  const NetworkSpec net = truncate_after(resnet18_like(2), "layer1_1");
  EXPECT_EQ(net.layers.back().name, "layer1_1");
  EXPECT_EQ(output_shape(net, net.input_shape), (Shape{64, 55, 55}));
  EXPECT_THROW(truncate_after(net, "layer1_1_conv1"), SchemaError);
}

}  // namespace
}  // namespace netmorph
