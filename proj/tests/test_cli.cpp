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
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "netmorph/cli.hpp"
#include "netmorph/io.hpp"
#include "test_support.hpp"

namespace netmorph {
namespace {

using nlohmann::json;
using testing::TempDir;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "netmorph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

TEST(Cli, InitIsDeterministic) {
  TempDir dir;
  for (const char* base : {"a", "b"}) {
    const auto r = run({"init", "--template", "tiny-conv", "--seed", "5", "--out", dir / base});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_EQ(slurp(dir / "a.weights"), slurp(dir / "b.weights"));
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--seed", "6", "--out", dir / "c"}).code, 0);
  EXPECT_NE(slurp(dir / "a.weights"), slurp(dir / "c.weights"));
}

TEST(Cli, InitResnetReportsOutputShape) {
  TempDir dir;
  const auto r = run({"init", "--template", "resnet18-like", "--classes", "2", "--out", dir / "r"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["output_shape"], json::array({2}));
}

TEST(Cli, SplitThenVerifyPasses) {
  TempDir dir;
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--out", dir / "m"}).code, 0);
  const auto split = run({"morph", "split", "--in", dir / "m", "--out", dir / "s", "--layer",
                          "conv1", "--k1", "5", "--k2", "3"});
  ASSERT_EQ(split.code, 0) << split.err;
  const json report = json::parse(split.out);
  EXPECT_EQ(report["condition"]["rhs"], 32 * 3 * 49);
  EXPECT_EQ(report["condition"]["rhs_mid_form"], 32 * 32 * 49);
  EXPECT_TRUE(report["converged"].get<bool>());
  EXPECT_EQ(report["record"]["inserted"].size(), 4u);

  const auto verify = run({"verify", "--model-a", dir / "m", "--model-b", dir / "s",
                           "--samples", "4", "--report", dir / "report.json"});
  EXPECT_EQ(verify.code, 0) << verify.out << verify.err;
  const json saved = json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(saved["pass"].get<bool>());
  EXPECT_EQ(saved["function"]["mode"], "exact-interior");

  // Same invocation, same bytes.
  ASSERT_EQ(run({"morph", "split", "--in", dir / "m", "--out", dir / "s2", "--layer", "conv1"})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "s.weights"), slurp(dir / "s2.weights"));
  EXPECT_EQ(slurp(dir / "s.json"), slurp(dir / "s2.json"));
}

TEST(Cli, SolverSettingsComeFromFlagsOrMetadata) {
  TempDir dir;
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--out", dir / "m"}).code, 0);
  const auto r = run({"morph", "split", "--in", dir / "m", "--out", dir / "s", "--layer", "conv1",
                      "--max-iters", "1", "--tol", "1e-300"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("did not converge"), std::string::npos);

  std::string spec = slurp(dir / "m.json");
  const json doc = json::parse(spec);
  json patched = doc;
  patched["metadata"]["solver.max_iters"] = "1";
  patched["metadata"]["solver.tol"] = "1e-300";
  write(dir / "m.json", patched.dump());
  EXPECT_EQ(run({"morph", "split", "--in", dir / "m", "--out", dir / "s", "--layer", "conv1"})
                .code,
            1);
  EXPECT_EQ(run({"morph", "split", "--in", dir / "m", "--out", dir / "s", "--layer", "conv1",
                 "--tol", "1e-6", "--max-iters", "10"})
                .code,
            0);
}

TEST(Cli, VerifyFailsOnDifferentWeights) {
  TempDir dir;
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--seed", "1", "--out", dir / "a"}).code, 0);
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--seed", "2", "--out", dir / "b"}).code, 0);
  const auto r = run({"verify", "--model-a", dir / "a", "--model-b", dir / "b", "--samples", "2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(json::parse(r.out)["pass"].get<bool>());
}

TEST(Cli, PromoteThenCheckShapes) {
  TempDir dir;
  ASSERT_EQ(run({"init", "--template", "tiny-conv", "--out", dir / "m"}).code, 0);
  const auto p = run({"morph", "promote", "--in", dir / "m", "--out", dir / "p"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_NE(p.out.find("(3,64,64) -> (3,128,128)"), std::string::npos);
  EXPECT_NE(p.out.find("conv1_1_pool"), std::string::npos);

  const auto v = run({"verify", "--model-a", dir / "m", "--model-b", dir / "p", "--mode",
                      "statistical", "--samples", "1", "--from-layer", "bn1"});
  EXPECT_EQ(v.code, 0) << v.out << v.err;
  const json report = json::parse(v.out);
  EXPECT_FALSE(report["function"]["asserted"].get<bool>());
  EXPECT_TRUE(report["shape"]["pass"].get<bool>());
  EXPECT_TRUE(report["flops"]["pass"].get<bool>());

  const auto front = run({"verify", "--model-a", dir / "m", "--model-b", dir / "p", "--mode",
                          "statistical", "--samples", "1", "--from-layer", "conv1_2"});
  EXPECT_EQ(front.code, 1);  // conv1_2 is absent from the original

  // Exact-interior comparison across resolutions is an error, not a pass.
  EXPECT_EQ(run({"verify", "--model-a", dir / "m", "--model-b", dir / "p"}).code, 1);
}

TEST(Cli, AnalyzeReportsReceptiveFieldsAndMacs) {
  TempDir dir;
  ASSERT_EQ(run({"init", "--template", "resnet18-like", "--out", dir / "r"}).code, 0);
  const auto a = run({"analyze", "--model", dir / "r"});
  ASSERT_EQ(a.code, 0) << a.err;
  const json j = json::parse(a.out);
  EXPECT_EQ(j["receptive_field"][0]["layer"], "conv1");
  EXPECT_EQ(j["receptive_field"][0]["size"], 7);
  EXPECT_EQ(j["receptive_field"][0]["jump"], 2);
  EXPECT_EQ(j["flops"]["per_layer"][0]["macs"], 118013952);
  const auto b = run({"analyze", "--model", dir / "r", "--input-size", "448x448"});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(json::parse(b.out)["flops"]["per_layer"][0]["macs"], 4 * 118013952ull);
  EXPECT_EQ(run({"analyze", "--model", dir / "r", "--input-size", "448"}).code, 2);
}

TEST(Cli, LossEvaluation) {
  TempDir dir;
  write(dir / "logits.csv", "c0,c1\n0,0\n2,0\n");
  write(dir / "labels.csv", "label\n0\n1\n");
  const auto r = run({"loss", "--logits", dir / "logits.csv", "--labels", dir / "labels.csv",
                      "--counts", "100,300", "--reduction", "sum", "--grad-out", dir / "g.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["weights"][0].get<double>(), 1.5, 1e-15);
  EXPECT_NEAR(j["per_sample"][0].get<double>(), 1.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(j["per_sample"][1].get<double>(), 0.5 * std::log(1 + std::exp(2.0)), 1e-12);
  const auto g = cli::read_csv(dir / "g.csv");
  EXPECT_EQ(g.header, (std::vector<std::string>{"c0", "c1"}));
  ASSERT_EQ(g.rows.size(), 2u);
  EXPECT_NEAR(g.rows[0][0], -0.75, 1e-15);
  EXPECT_NEAR(g.rows[1][0], 0.440399, 1e-6);
  EXPECT_NEAR(g.rows[1][1], -0.440399, 1e-6);

  const auto plain = run({"loss", "--logits", dir / "logits.csv", "--labels", dir / "labels.csv"});
  ASSERT_EQ(plain.code, 0);
  EXPECT_EQ(json::parse(plain.out)["reduction"], "mean");

  EXPECT_EQ(run({"loss", "--logits", dir / "logits.csv", "--labels", dir / "labels.csv",
                 "--reduction", "median"})
                .code,
            2);
  EXPECT_EQ(run({"loss", "--logits", dir / "logits.csv", "--labels", dir / "labels.csv",
                 "--counts", "1,x"})
                .code,
            2);
  write(dir / "bad.csv", "label\n7\n1\n");
  EXPECT_EQ(run({"loss", "--logits", dir / "logits.csv", "--labels", dir / "bad.csv"}).code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"init"}).code, 2);
  EXPECT_EQ(run({"init", "--out", "x", "--template", "vgg"}).code, 2);
  EXPECT_EQ(run({"init", "--out", "x", "--dtype", "f16"}).code, 2);
  EXPECT_EQ(run({"verify", "--model-a", "a", "--model-b", "b", "--mode", "fuzzy"}).code, 2);
  EXPECT_EQ(run({"morph"}).code, 2);
  EXPECT_EQ(run({"morph", "split", "--in", "a", "--out", "b", "--layer", "c", "-k", "3"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Csv, ParseAndFormat) {
  const auto t = cli::parse_csv("a, b\n1.5,-2e3\n\n0.1,3\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.rows, (std::vector<std::vector<double>>{{1.5, -2000.0}, {0.1, 3.0}}));
  EXPECT_EQ(cli::parse_csv(cli::format_csv(t)).rows, t.rows);
  EXPECT_THROW(cli::parse_csv("a,b\n1\n"), std::invalid_argument);
  EXPECT_THROW(cli::parse_csv("a\n1,5x\n"), std::invalid_argument);
  EXPECT_THROW(cli::parse_csv("a\nfoo\n"), std::invalid_argument);
  EXPECT_THROW(cli::parse_csv(""), std::invalid_argument);
}

}  // namespace
}  // namespace netmorph
