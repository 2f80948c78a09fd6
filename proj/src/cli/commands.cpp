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

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "netmorph/cli.hpp"
#include "netmorph/flops.hpp"
#include "netmorph/io.hpp"
#include "netmorph/loss.hpp"
#include "netmorph/morph.hpp"
#include "netmorph/network_json.hpp"
#include "netmorph/receptive_field.hpp"
#include "netmorph/verify.hpp"

namespace netmorph::cli {

using nlohmann::json;

namespace {

// Raised for bad flag values discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverFlags {
  std::optional<double> tol;
  std::optional<std::size_t> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<double> ridge;

  void attach(CLI::App* app) {
    app->add_option("--tol", tol, "Relative residual tolerance of the factorization");
    app->add_option("--max-iters", max_iters, "Maximum alternating least-squares sweeps");
    app->add_option("--seed", seed, "Seed of the factorization initialisation");
    app->add_option("--ridge", ridge, "Relative ridge regularisation");
  }

  SolverConfig resolve(const NetworkSpec& net) const {
    SolverConfig c = solver_config_from_metadata(net.metadata);
    if (tol) c.tolerance = *tol;
    if (max_iters) c.max_iters = *max_iters;
    if (seed) c.seed = *seed;
    if (ridge) c.ridge = *ridge;
    return c;
  }
};

json condition_json(const MorphCondition& c) {
  return json{{"holds", c.holds},
              {"lhs_first", c.lhs_first},
              {"lhs_second", c.lhs_second},
              {"rhs", c.rhs},
              {"rhs_mid_form", c.rhs_mid_form}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string shape_cell(const std::optional<Shape>& s) { return s ? shape_to_string(*s) : "-"; }

// Before/after rows aligned by layer name; new layers show "-" before.
std::string shape_table(const std::vector<LayerShape>& before,
                        const std::vector<LayerShape>& after) {
  std::map<std::string, Shape> old;
  for (const auto& r : before) old[r.name] = r.output;
  std::size_t width = 5;
  for (const auto& r : after) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width + 2)) << "layer" << std::setw(18)
      << "before"
      << "after\n";
  for (const auto& r : after) {
    const auto it = old.find(r.name);
    out << std::setw(static_cast<int>(width + 2)) << r.name << std::setw(18)
        << shape_cell(it == old.end() ? std::nullopt : std::optional<Shape>(it->second))
        << shape_to_string(r.output) << "\n";
  }
  return out.str();
}

Chw parse_input_size(const std::string& text, std::size_t channels) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_h = 0, used_w = 0;
    const auto h = std::stoul(text.substr(0, x), &used_h);
    const auto w = std::stoul(text.substr(x + 1), &used_w);
    if (used_h != x || used_w != text.size() - x - 1 || h == 0 || w == 0) {
      throw std::invalid_argument(text);
    }
    return {channels, h, w};
  } catch (const std::logic_error&) {
    throw UsageError("--input-size must look like HxW, got '" + text + "'");
  }
}

DType weights_dtype(const WeightsStore& a, const WeightsStore& b) {
  for (const auto* s : {&a, &b})
    for (const auto& [n, t] : *s)
      if (t.dtype() == DType::kF64) return DType::kF64;
  return DType::kF32;
}

// ---------------------------------------------------------------------------

struct InitArgs {
  std::string template_name = "resnet18-like";
  std::size_t classes = 2;
  std::uint64_t seed = 0;
  std::string dtype = "f32";
  std::string out;
};

int cmd_init(const InitArgs& a, std::ostream& out) {
  DType dtype;
  NetworkSpec net;
  try {
    dtype = parse_dtype(a.dtype);
    net = make_template(a.template_name, a.classes);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Model model{net, init_weights(net, a.seed, dtype)};
  save_model(a.out, model);
  std::size_t params = 0;
  for (const auto& [n, t] : model.weights) params += t.size();
  out << json{{"template", a.template_name},
              {"spec", spec_path(a.out).string()},
              {"weights", weights_path(a.out).string()},
              {"parameters", params},
              {"dtype", a.dtype},
              {"input_shape", net.input_shape},
              {"output_shape", output_shape(net, net.input_shape)}}
             .dump(2)
      << "\n";
  return kPass;
}

struct SplitArgs {
  std::string in, out, layer;
  std::size_t k1 = 5, k2 = 3;
  std::optional<std::size_t> mid;
  SolverFlags solver;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const Model m = load_model(a.in);
  const LayerNode* node = find_layer(m.net, a.layer);
  if (!node || node->kind() != LayerKind::kConv2d) {
    throw MorphError("no Conv2d layer named '" + a.layer + "'");
  }
  const std::size_t mid = a.mid.value_or(node->as<Conv2dAttrs>().out_channels);
  const SolverConfig config = a.solver.resolve(m.net);
  const auto r = split_conv(m.net, m.weights, a.layer, a.k1, a.k2, mid, config);
  save_model(a.out, {r.net, r.weights});
  out << json{{"record", json::parse(r.record.to_json())},
              {"condition", condition_json(r.condition)},
              {"residual", r.factorization.residual},
              {"iterations", r.factorization.iterations},
              {"converged", r.factorization.converged},
              {"effective_kernel", effective_kernel_size(a.k1, a.k2)}}
             .dump(2)
      << "\n";
  return kPass;
}

struct PromoteArgs {
  std::string in, out;
  SolverFlags solver;
};

int cmd_promote(const PromoteArgs& a, std::ostream& out) {
  const Model m = load_model(a.in);
  const auto r = promote_resolution(m.net, m.weights, a.solver.resolve(m.net));
  save_model(a.out, {r.net, r.weights});
  out << "input " << shape_to_string({m.net.input_shape.begin(), m.net.input_shape.end()})
      << " -> " << shape_to_string({r.net.input_shape.begin(), r.net.input_shape.end()})
      << "\n";
  for (const auto& rec : r.records) out << "morph " << rec.to_json() << "\n";
  out << shape_table(r.shapes_before, r.shapes_after);
  return kPass;
}

struct VerifyArgs {
  std::string model_a, model_b;
  std::size_t samples = 16;
  std::uint64_t seed = 0;
  std::optional<double> tol, tol_rel;
  std::string mode = "exact-interior";
  std::string from_layer, compare_layer, report;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  VerifyOptions opt;
  opt.samples = a.samples;
  opt.seed = a.seed;
  opt.compare_layer = a.compare_layer;
  try {
    opt.mode = parse_verify_mode(a.mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.samples == 0) throw UsageError("--samples must be positive");
  const Model ma = load_model(a.model_a);
  const Model mb = load_model(a.model_b);
  if (a.tol || a.tol_rel) {
    Tolerance t = Tolerance::defaults_for(weights_dtype(ma.weights, mb.weights));
    if (a.tol) t.abs = t.rel = *a.tol;
    if (a.tol_rel) t.rel = *a.tol_rel;
    opt.tolerance = t;
  }

  json report;
  const auto fn = verify_function_preservation(ma.net, ma.weights, mb.net, mb.weights, opt);
  report["function"] = to_json(fn);
  bool pass = !fn.asserted || fn.pass;
  if (!a.from_layer.empty()) {
    const auto shapes =
        verify_shape_preservation(ma.net, ma.net.input_shape, mb.net, mb.net.input_shape,
                                  a.from_layer);
    const auto flops =
        verify_flops_preservation(ma.net, ma.net.input_shape, mb.net, mb.net.input_shape,
                                  a.from_layer);
    report["from_layer"] = a.from_layer;
    report["shape"] = to_json(shapes);
    report["flops"] = to_json(flops);
    pass = pass && shapes.pass && flops.pass;
  }
  report["pass"] = pass;
  const std::string text = report.dump(2) + "\n";
  if (!a.report.empty()) write_text(a.report, text);
  out << text;
  return pass ? kPass : kFail;
}

struct AnalyzeArgs {
  std::string model, input_size;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const NetworkSpec net = load_network(spec_path(a.model));
  const Chw shape =
      a.input_size.empty() ? net.input_shape : parse_input_size(a.input_size, net.input_shape[0]);
  json rf = json::array();
  for (const auto& node : net.layers) {
    if (node.kind() == LayerKind::kGlobalAvgPool || node.kind() == LayerKind::kLinear) break;
    const auto s = receptive_field(net, node.name);
    rf.push_back({{"layer", node.name},
                  {"size", s.size},
                  {"jump", s.jump},
                  {"offset", s.offset.to_string()}});
  }
  out << json{{"input_shape", shape},
              {"shapes", to_json(infer_shapes(net, shape))},
              {"flops", to_json(count_flops(net, shape))},
              {"receptive_field", rf}}
             .dump(2)
      << "\n";
  return kPass;
}

struct LossArgs {
  std::string logits, labels, counts, grad_out;
  std::string reduction = "mean";
};

int cmd_loss(const LossArgs& a, std::ostream& out) {
  const Table logits = read_csv(a.logits);
  const Table labels = read_csv(a.labels);
  if (labels.header.size() != 1) throw UsageError("labels CSV must have a single column");
  const std::size_t n = logits.rows.size(), c = logits.header.size();

  LossBatch batch;
  std::vector<double> flat;
  for (const auto& row : logits.rows) flat.insert(flat.end(), row.begin(), row.end());
  batch.logits = Tensor({n, c}, std::move(flat));
  for (const auto& row : labels.rows) {
    if (row[0] < 0 || row[0] != static_cast<double>(static_cast<std::size_t>(row[0]))) {
      throw UsageError("labels must be non-negative integers");
    }
    batch.labels.push_back(static_cast<std::size_t>(row[0]));
  }

  ClassWeights w = ClassWeights::uniform(c);
  if (!a.counts.empty()) {
    std::vector<std::uint64_t> counts;
    std::istringstream in(a.counts);
    std::string cell;
    while (std::getline(in, cell, ',')) {
      try {
        std::size_t used = 0;
        counts.push_back(std::stoull(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw UsageError("--counts must be comma-separated integers, got '" + a.counts + "'");
      }
    }
    try {
      w = class_weights(counts);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  Reduction reduction;
  try {
    reduction = parse_reduction(a.reduction);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const double loss = weighted_cross_entropy(batch, w, reduction);
  if (!a.grad_out.empty()) {
    const Tensor g = wce_gradient(batch, w, reduction);
    Table t{logits.header, {}};
    for (std::size_t i = 0; i < n; ++i) {
      t.rows.emplace_back(g.data().begin() + static_cast<std::ptrdiff_t>(i * c),
                          g.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
    }
    write_text(a.grad_out, format_csv(t));
  }
  out << json{{"loss", loss},
              {"reduction", std::string(reduction_name(reduction))},
              {"weights", w.weights},
              {"per_sample", weighted_cross_entropy_per_sample(batch, w)}}
             .dump(2)
      << "\n";
  return kPass;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Function-preserving network rewrites and their checks", "netmorph"};
  app.require_subcommand(1);

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init", "Write a seeded model from a template");
  init_cmd->add_option("--template", init.template_name, "resnet18-like or tiny-conv")
      ->capture_default_str();
  init_cmd->add_option("--classes", init.classes, "Number of output classes")
      ->capture_default_str();
  init_cmd->add_option("--seed", init.seed, "Weight initialisation seed")->capture_default_str();
  init_cmd->add_option("--dtype", init.dtype, "f32 or f64")->capture_default_str();
  init_cmd->add_option("--out", init.out, "Output model basename")->required();

  auto* morph_cmd = app.add_subcommand("morph", "Rewrite a model");
  morph_cmd->require_subcommand(1);
  SplitArgs split;
  auto* split_cmd = morph_cmd->add_subcommand("split", "Split a convolution in two");
  split_cmd->add_option("--in", split.in, "Input model basename")->required();
  split_cmd->add_option("--out", split.out, "Output model basename")->required();
  split_cmd->add_option("--layer", split.layer, "Conv2d layer to split")->required();
  split_cmd->add_option("--k1", split.k1, "First kernel size")->capture_default_str();
  split_cmd->add_option("--k2", split.k2, "Second kernel size")->capture_default_str();
  split_cmd->add_option("--mid-channels", split.mid,
                        "Intermediate channels (default: the layer's output channels)");
  split.solver.attach(split_cmd);

  PromoteArgs promote;
  auto* promote_cmd = morph_cmd->add_subcommand("promote", "Double the input resolution");
  promote_cmd->add_option("--in", promote.in, "Input model basename")->required();
  promote_cmd->add_option("--out", promote.out, "Output model basename")->required();
  promote.solver.attach(promote_cmd);

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Compare two models");
  verify_cmd->add_option("--model-a", verify.model_a, "Reference model basename")->required();
  verify_cmd->add_option("--model-b", verify.model_b, "Candidate model basename")->required();
  verify_cmd->add_option("--samples", verify.samples, "Random inputs")->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "Input sampling seed")->capture_default_str();
  verify_cmd->add_option("--tol", verify.tol, "Absolute (and relative) tolerance");
  verify_cmd->add_option("--tol-rel", verify.tol_rel, "Relative tolerance");
  verify_cmd->add_option("--mode", verify.mode, "exact-interior or statistical")
      ->capture_default_str();
  verify_cmd->add_option("--from-layer", verify.from_layer,
                         "Also check shapes and MACs from this layer on");
  verify_cmd->add_option("--compare-layer", verify.compare_layer,
                         "Compare this layer's output instead of the final one");
  verify_cmd->add_option("--report", verify.report, "Write the JSON report here");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Shapes, MACs and receptive fields");
  analyze_cmd->add_option("--model", analyze.model, "Model basename")->required();
  analyze_cmd->add_option("--input-size", analyze.input_size, "HxW (default: declared)");

  LossArgs loss;
  auto* loss_cmd = app.add_subcommand("loss", "Class-weighted cross entropy");
  loss_cmd->add_option("--logits", loss.logits, "CSV of logits, one row per sample")
      ->required();
  loss_cmd->add_option("--labels", loss.labels, "CSV with one label column")->required();
  loss_cmd->add_option("--counts", loss.counts, "Per-class counts, e.g. 100,300");
  loss_cmd->add_option("--reduction", loss.reduction, "sum, mean or batch-mean")
      ->capture_default_str();
  loss_cmd->add_option("--grad-out", loss.grad_out, "Write d loss / d logits CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*init_cmd) return cmd_init(init, out);
    if (*split_cmd) return cmd_split(split, out);
    if (*promote_cmd) return cmd_promote(promote, out);
    if (*verify_cmd) return cmd_verify(verify, out);
    if (*analyze_cmd) return cmd_analyze(analyze, out);
    if (*loss_cmd) return cmd_loss(loss, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}

}  // namespace netmorph::cli
