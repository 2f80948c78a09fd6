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

#include <random>

#include "netmorph/io.hpp"
#include "netmorph/network_json.hpp"
#include "netmorph/shape_inference.hpp"
#include "test_support.hpp"

namespace netmorph {
namespace {

using testing::conv_node;
using testing::uniform_int;

// Random valid network: a chain of conv/bn/act/pool and residual blocks,
// optionally closed by a global pool and a linear head.
NetworkSpec random_network(std::mt19937_64& rng) {
  NetworkSpec net;
  std::size_t c = uniform_int(rng, 1, 4), h = uniform_int(rng, 6, 20), w = uniform_int(rng, 6, 20);
  net.input_shape = {c, h, w};
  const std::size_t n = uniform_int(rng, 1, 8);
  int id = 0;
  auto name = [&](const char* stem) { return std::string(stem) + std::to_string(id++); };
  for (std::size_t i = 0; i < n; ++i) {
    switch (uniform_int(rng, 0, 4)) {
      case 0: {
        const std::size_t k = uniform_int(rng, 1, 3), p = uniform_int(rng, 0, 1);
        const std::size_t s = uniform_int(rng, 1, 2);
        if (h + 2 * p < k || w + 2 * p < k) break;
        const std::size_t out = uniform_int(rng, 1, 5);
        net.layers.push_back(conv_node(name("conv"), c, out, k, s, p, uniform_int(rng, 0, 1)));
        c = out;
        h = conv_output_size(h, k, s, p);
        w = conv_output_size(w, k, s, p);
        break;
      }
      case 1:
        net.layers.push_back({name("bn"), BatchNormAttrs{c, 1e-5 * double(uniform_int(rng, 1, 9))}});
        break;
      case 2:
        net.layers.push_back(
            {name("act"), ActivationAttrs{uniform_int(rng, 0, 1) ? ActivationMode::kPrelu
                                                                  : ActivationMode::kRelu}});
        break;
      case 3:
        if (h < 2 || w < 2) break;
        net.layers.push_back({name("pool"), MaxPoolAttrs{2, 2}});
        h = conv_output_size(h, 2, 2, 0);
        w = conv_output_size(w, 2, 2, 0);
        break;
      case 4: {
        const std::string b = name("block");
        ResidualAttrs r;
        const std::size_t out = uniform_int(rng, 1, 5);
        r.main = {conv_node(b + "_c1", c, out, 3, 1, 1), {b + "_bn", BatchNormAttrs{out, 1e-5}},
                  {b + "_act", ActivationAttrs{}}, conv_node(b + "_c2", out, out, 3, 1, 1)};
        if (out != c) r.shortcut = {conv_node(b + "_down", c, out, 1)};
        net.layers.push_back({b, std::move(r)});
        c = out;
        break;
      }
    }
  }
  if (uniform_int(rng, 0, 1)) {
    net.layers.push_back({name("gap"), GlobalAvgPoolAttrs{}});
    net.layers.push_back({name("fc"), LinearAttrs{c, uniform_int(rng, 1, 4)}});
  }
  const std::size_t m = uniform_int(rng, 0, 3);
  for (std::size_t i = 0; i < m; ++i) {
    net.metadata["key" + std::to_string(i)] = "value \"" + std::to_string(rng() % 1000) + "\"\n";
  }
  return net;
}

const char* kMinimalDoc = R"({
  "input_shape": [3, 224, 224],
  "layers": [
    {"name": "conv1", "kind": "Conv2d", "in_channels": 3, "out_channels": 64,
     "kernel_size": 7, "stride": 2, "padding": 3, "has_bias": false}
  ],
  "metadata": {}
})";

TEST(Tensor, RejectsDataOfWrongLength) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
}

TEST(Tensor, F32StorageRoundsOnConstruction) {
  const Tensor t({1}, {0.1}, DType::kF32);
  EXPECT_EQ(t[0], static_cast<double>(0.1f));
  EXPECT_NE(t[0], 0.1);
}

TEST(Tensor, ReshapeKeepsElementsAndRejectsOtherCounts) {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.shape(), (Shape{3, 2}));
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()),
            std::vector<double>(t.data().begin(), t.data().end()));
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(ParseNetwork, MinimalDocumentHasOneLayer) {
  const NetworkSpec net = parse_network(kMinimalDoc);
  ASSERT_EQ(net.layers.size(), 1u);
  EXPECT_EQ(net.layers[0].kind(), LayerKind::kConv2d);
  EXPECT_EQ(net.layers[0].as<Conv2dAttrs>().kernel_size, 7u);
  EXPECT_EQ(net.layers[0].param_refs(), std::vector<std::string>{"conv1.weight"});
}

TEST(ParseNetwork, ResnetDocumentHasMoreThanTwentyNodes) {
  const NetworkSpec net = parse_network(serialize_network(resnet18_like(2)));
  std::size_t nodes = 0;
  for_each_layer(net.layers, [&](const LayerNode&) { ++nodes; });
  EXPECT_GE(nodes, 20u);
  EXPECT_EQ(output_shape(net, net.input_shape), (Shape{2}));
}

TEST(ParseNetwork, ChannelMismatchIsRejected) {
  const std::string doc = R"({
    "input_shape": [3, 32, 32],
    "layers": [
      {"name": "conv", "kind": "Conv2d", "in_channels": 3, "out_channels": 64,
       "kernel_size": 3, "stride": 1, "padding": 1, "has_bias": false},
      {"name": "bn", "kind": "BatchNorm2d", "channels": 32, "epsilon": 1e-5}
    ],
    "metadata": {}
  })";
  try {
    parse_network(doc);
    FAIL() << "expected a channel mismatch";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channel mismatch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bn"), std::string::npos);
  }
}

TEST(ParseNetwork, ErrorsNameTheOffendingField) {
  auto message = [](const std::string& doc) {
    try {
      parse_network(doc);
    } catch (const SchemaError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  std::string doc = kMinimalDoc;
  const std::string unknown =
      std::string(doc).replace(doc.find("\"has_bias\""), 0, "\"dilation\": 2, ");
  EXPECT_NE(message(unknown).find("dilation"), std::string::npos);
  const std::string missing =
      std::string(doc).replace(doc.find("\"padding\": 3, "), 14, "");
  EXPECT_NE(message(missing).find("padding"), std::string::npos);
  const std::string zero_stride =
      std::string(doc).replace(doc.find("\"stride\": 2"), 11, "\"stride\": 0");
  EXPECT_NE(message(zero_stride).find("stride"), std::string::npos);
  const std::string top =
      std::string(doc).replace(doc.find("\"metadata\""), 0, "\"extra\": 1, ");
  EXPECT_NE(message(top).find("extra"), std::string::npos);
}

TEST(ParseNetwork, DuplicateNamesAreRejected) {
  NetworkSpec net;
  net.input_shape = {1, 4, 4};
  net.layers = {{"a", ActivationAttrs{}}, {"a", ActivationAttrs{}}};
  EXPECT_THROW(validate(net), SchemaError);
  EXPECT_THROW(parse_network(serialize_network(net)), SchemaError);
}

TEST(SerializeNetwork, OneLayerRoundTrip) {
  const NetworkSpec net = parse_network(kMinimalDoc);
  EXPECT_EQ(parse_network(serialize_network(net)), net);
  EXPECT_EQ(serialize_network(parse_network(serialize_network(net))), serialize_network(net));
}

TEST(SerializeNetwork, ResnetRoundTrip) {
  const NetworkSpec net = resnet18_like(2);
  EXPECT_EQ(parse_network(serialize_network(net)), net);
}

TEST(SerializeNetwork, MetadataIsPreservedVerbatim) {
  NetworkSpec net = parse_network(kMinimalDoc);
  net.metadata["provenance"] = "  spaced, \"quoted\"\nunicode: é ";
  net.metadata["solver.tol"] = "1e-7";
  const NetworkSpec back = parse_network(serialize_network(net));
  EXPECT_EQ(back.metadata, net.metadata);
}

TEST(SerializeNetwork, RandomNetworksRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const NetworkSpec net = random_network(rng);
    ASSERT_NO_THROW(validate(net)) << serialize_network(net);
    const std::string text = serialize_network(net);
    const NetworkSpec back = parse_network(text);
    ASSERT_EQ(back, net) << text;
    ASSERT_EQ(serialize_network(back), text);
  }
}

TEST(InferShapes, FrontConvAt224) {
  const NetworkSpec net = parse_network(kMinimalDoc);
  EXPECT_EQ(infer_shapes(net).back().output, (Shape{64, 112, 112}));
}

TEST(InferShapes, StridedFiveByFiveThenPoolAt448) {
  NetworkSpec net;
  net.input_shape = {3, 448, 448};
  net.layers = {conv_node("conv1_1", 3, 64, 5, 2, 2), {"pool", MaxPoolAttrs{2, 2}}};
  const auto rows = infer_shapes(net);
  EXPECT_EQ(rows[0].output, (Shape{64, 224, 224}));
  EXPECT_EQ(rows[1].output, (Shape{64, 112, 112}));
}

TEST(InferShapes, UnitGeometry) {
  NetworkSpec net;
  net.input_shape = {1, 1, 1};
  net.layers = {conv_node("c", 1, 1, 1)};
  EXPECT_EQ(infer_shapes(net).back().output, (Shape{1, 1, 1}));
}

TEST(InferShapes, WindowLargerThanInputIsAnError) {
  NetworkSpec net;
  net.input_shape = {1, 4, 4};
  net.layers = {conv_node("c", 1, 1, 7)};
  EXPECT_THROW(infer_shapes(net), ShapeError);
  net.layers = {{"p", MaxPoolAttrs{5, 1}}};
  EXPECT_THROW(infer_shapes(net), ShapeError);
}

TEST(InferShapes, ResidualRowsCarryTheirParent) {
  const auto rows = infer_shapes(resnet18_like(2));
  bool saw_sub = false;
  for (const auto& r : rows) {
    if (r.name == "layer1_0_conv1") {
      EXPECT_EQ(r.parent, "layer1_0");
      saw_sub = true;
    }
    if (r.name == "layer2_0") EXPECT_EQ(r.output, (Shape{128, 28, 28}));
    if (r.name == "maxpool") EXPECT_EQ(r.output, (Shape{64, 55, 55}));
  }
  EXPECT_TRUE(saw_sub);
  EXPECT_EQ(rows.back().output, (Shape{2}));
}

// Output length by enumerating window placements on the padded axis.
std::size_t enumerate_positions(std::size_t n, std::size_t k, std::size_t s, std::size_t p) {
  std::size_t count = 0;
  for (std::size_t start = 0; start + k <= n + 2 * p; start += s) ++count;
  return count;
}

TEST(InferShapes, ConvArithmeticMatchesEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = uniform_int(rng, 1, 7), s = uniform_int(rng, 1, 4);
    const std::size_t p = uniform_int(rng, 0, 3);
    const std::size_t h = uniform_int(rng, 1, 40), w = uniform_int(rng, 1, 40);
    NetworkSpec net;
    net.input_shape = {2, h, w};
    net.layers = {conv_node("c", 2, 3, k, s, p)};
    if (h + 2 * p < k || w + 2 * p < k) {
      EXPECT_THROW(infer_shapes(net), ShapeError);
      continue;
    }
    const auto out = infer_shapes(net).back().output;
    EXPECT_EQ(out, (Shape{3, enumerate_positions(h, k, s, p), enumerate_positions(w, k, s, p)}))
        << "k=" << k << " s=" << s << " p=" << p << " h=" << h << " w=" << w;
  }
}

TEST(Validate, WeightsMustMatchTheSpec) {
  const NetworkSpec net = tiny_conv(2);
  WeightsStore w = init_weights(net, 0);
  EXPECT_NO_THROW(validate_weights(net, w));
  w.erase("bn1.gamma");
  try {
    validate_weights(net, w);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("bn1.gamma"), std::string::npos);
  }
  w = init_weights(net, 0);
  w["conv2.weight"] = Tensor({32, 32, 1, 1});
  EXPECT_THROW(validate_weights(net, w), SchemaError);
}

}  // namespace
}  // namespace netmorph
