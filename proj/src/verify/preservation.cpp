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
#include <cmath>
#include <random>
#include <thread>

#include "netmorph/engine.hpp"
#include "netmorph/verify.hpp"

namespace netmorph {

using nlohmann::json;

namespace {

struct MaskWalker {
  std::string_view capture;
  std::optional<PaddingFreeMask> captured;

  static std::vector<bool> window(const std::vector<bool>& in, std::size_t k, std::size_t s,
                                  std::size_t p) {
    const std::size_t n = in.size();
    std::vector<bool> out(conv_output_size(n, k, s, p));
    for (std::size_t y = 0; y < out.size(); ++y) {
      bool clean = true;
      for (std::size_t u = 0; u < k && clean; ++u) {
        const std::size_t idx = y * s + u;  // index into the padded extent
        clean = idx >= p && idx - p < n && in[idx - p];
      }
      out[y] = clean;
    }
    return out;
  }

  static bool all_clean(const PaddingFreeMask& m) {
    return std::all_of(m.rows.begin(), m.rows.end(), [](bool b) { return b; }) &&
           std::all_of(m.cols.begin(), m.cols.end(), [](bool b) { return b; });
  }

  PaddingFreeMask chain(const std::vector<LayerNode>& layers, PaddingFreeMask m) {
    for (const auto& node : layers) m = step(node, m);
    return m;
  }

  PaddingFreeMask step(const LayerNode& node, const PaddingFreeMask& in) {
    PaddingFreeMask out = in;
    switch (node.kind()) {
      case LayerKind::kConv2d: {
        const auto& a = node.as<Conv2dAttrs>();
        out.rows = window(in.rows, a.kernel_size, a.stride, a.padding);
        out.cols = window(in.cols, a.kernel_size, a.stride, a.padding);
        break;
      }
      case LayerKind::kMaxPool2d: {
        const auto& a = node.as<MaxPoolAttrs>();
        out.rows = window(in.rows, a.kernel_size, a.stride, 0);
        out.cols = window(in.cols, a.kernel_size, a.stride, 0);
        break;
      }
      case LayerKind::kGlobalAvgPool:
        out = PaddingFreeMask{{all_clean(in)}, {}, false};
        break;
      case LayerKind::kResidualBlock: {
        const auto& r = node.as<ResidualAttrs>();
        const PaddingFreeMask main = chain(r.main, in);
        const PaddingFreeMask shortcut = chain(r.shortcut, in);
        out = main;
        for (std::size_t i = 0; i < out.rows.size(); ++i)
          out.rows[i] = main.rows[i] && shortcut.rows[i];
        for (std::size_t i = 0; i < out.cols.size(); ++i)
          out.cols[i] = main.cols[i] && shortcut.cols[i];
        break;
      }
      case LayerKind::kBatchNorm2d:
      case LayerKind::kActivation:
      case LayerKind::kLinear:
        break;
    }
    if (!capture.empty() && node.name == capture) captured = out;
    return out;
  }
};

DType infer_dtype(const WeightsStore& a, const WeightsStore& b) {
  for (const auto* store : {&a, &b}) {
    for (const auto& [name, t] : *store) {
      if (t.dtype() == DType::kF64) return DType::kF64;
    }
  }
  return (a.empty() && b.empty()) ? DType::kF64 : DType::kF32;
}

Tensor box_downsample(const Tensor& x, std::size_t factor) {
  const std::size_t c = x.dim(0), h = x.dim(1) / factor, w = x.dim(2) / factor;
  std::vector<double> out(c * h * w);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (std::size_t u = 0; u < factor; ++u)
          for (std::size_t v = 0; v < factor; ++v) s += x.at(ch, y * factor + u, xx * factor + v);
        out[(ch * h + y) * w + xx] = s * inv;
      }
  return Tensor({c, h, w}, std::move(out), x.dtype());
}

std::size_t start_index(const std::vector<std::string>& names,
                        const std::vector<std::string>& parents, std::string_view from,
                        std::string_view which) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == from || parents[i] == from) return i;
  }
  throw SchemaError("unknown layer '" + std::string(from) + "' in network " +
                    std::string(which));
}

template <typename Row, typename Cmp>
std::pair<bool, std::vector<std::tuple<std::string, std::optional<Row>, std::optional<Row>, bool>>>
zip_tails(const std::vector<Row>& a, const std::vector<Row>& b, std::string_view from,
          Cmp equal) {
  std::vector<std::string> na, pa, nb, pb;
  for (const auto& r : a) {
    na.push_back(r.name);
    pa.push_back(r.parent);
  }
  for (const auto& r : b) {
    nb.push_back(r.name);
    pb.push_back(r.parent);
  }
  std::size_t i = start_index(na, pa, from, "A");
  std::size_t j = start_index(nb, pb, from, "B");
  std::vector<std::tuple<std::string, std::optional<Row>, std::optional<Row>, bool>> rows;
  bool pass = true;
  while (i < a.size() || j < b.size()) {
    std::optional<Row> ra = i < a.size() ? std::optional<Row>(a[i]) : std::nullopt;
    std::optional<Row> rb = j < b.size() ? std::optional<Row>(b[j]) : std::nullopt;
    const bool eq = ra && rb && ra->name == rb->name && equal(*ra, *rb);
    pass = pass && eq;
    rows.emplace_back(ra ? ra->name : rb->name, ra, rb, eq);
    ++i;
    ++j;
  }
  return {pass, std::move(rows)};
}

json shape_json(const Shape& s) { return json(s); }

}  // namespace

VerifyMode parse_verify_mode(std::string_view name) {
  if (name == "exact-interior") return VerifyMode::kExactInterior;
  if (name == "statistical") return VerifyMode::kStatistical;
  throw std::invalid_argument("unknown verify mode '" + std::string(name) +
                              "' (expected exact-interior or statistical)");
}

std::string_view verify_mode_name(VerifyMode mode) {
  return mode == VerifyMode::kExactInterior ? "exact-interior" : "statistical";
}

PaddingFreeMask padding_free_mask(const NetworkSpec& net, const Chw& input_shape,
                                  std::string_view upto_layer) {
  MaskWalker walker{upto_layer, std::nullopt};
  PaddingFreeMask start{std::vector<bool>(input_shape[1], true),
                        std::vector<bool>(input_shape[2], true), true};
  PaddingFreeMask out = walker.chain(net.layers, start);
  if (upto_layer.empty()) return out;
  if (!walker.captured) throw SchemaError("unknown layer '" + std::string(upto_layer) + "'");
  return *walker.captured;
}

PreservationReport verify_function_preservation(const NetworkSpec& net_a,
                                                const WeightsStore& weights_a,
                                                const NetworkSpec& net_b,
                                                const WeightsStore& weights_b,
                                                const VerifyOptions& options) {
  PreservationReport report;
  report.mode = options.mode;
  report.samples = options.samples;
  report.compared_layer = options.compare_layer;
  report.input_shape_a = net_a.input_shape;
  report.input_shape_b = net_b.input_shape;
  report.dtype = options.input_dtype.value_or(infer_dtype(weights_a, weights_b));
  report.tolerance = options.tolerance.value_or(Tolerance::defaults_for(report.dtype));
  report.shapes_a = infer_shapes(net_a);
  report.shapes_b = infer_shapes(net_b);

  if (options.samples == 0) throw std::invalid_argument("verification needs >= 1 sample");
  if (!options.compare_layer.empty() && (!find_layer(net_a, options.compare_layer) ||
                                         !find_layer(net_b, options.compare_layer))) {
    throw SchemaError("compare layer '" + options.compare_layer + "' missing from a network");
  }

  std::size_t downsample = 1;
  if (net_a.input_shape != net_b.input_shape) {
    if (options.mode == VerifyMode::kExactInterior) {
      throw ShapeError("exact-interior mode requires identical input shapes, got " +
                       shape_to_string({net_a.input_shape.begin(), net_a.input_shape.end()}) +
                       " and " +
                       shape_to_string({net_b.input_shape.begin(), net_b.input_shape.end()}));
    }
    const auto& sa = net_a.input_shape;
    const auto& sb = net_b.input_shape;
    downsample = sb[1] / sa[1];
    if (sa[0] != sb[0] || downsample == 0 || sa[1] * downsample != sb[1] ||
        sa[2] * downsample != sb[2]) {
      throw ShapeError("input shapes are not related by an integer resolution factor");
    }
    report.asserted = false;
  }

  // Inputs are drawn sequentially so the sample set depends only on the seed.
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Shape in_shape(net_b.input_shape.begin(), net_b.input_shape.end());
  std::vector<Tensor> inputs;
  inputs.reserve(options.samples);
  for (std::size_t s = 0; s < options.samples; ++s) {
    std::vector<double> v(shape_numel(in_shape));
    for (auto& x : v) x = normal(rng);
    inputs.emplace_back(in_shape, std::move(v), report.dtype);
  }

  std::vector<Tensor> out_a(options.samples), out_b(options.samples);
  auto evaluate = [&](std::size_t s) {
    const Tensor in_a = downsample == 1 ? inputs[s] : box_downsample(inputs[s], downsample);
    auto ta = forward_capture(net_a, weights_a, in_a, options.compare_layer);
    auto tb = forward_capture(net_b, weights_b, inputs[s], options.compare_layer);
    out_a[s] = options.compare_layer.empty() ? std::move(ta.output) : std::move(*ta.captured);
    out_b[s] = options.compare_layer.empty() ? std::move(tb.output) : std::move(*tb.captured);
  };
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, options.samples);
  if (workers == 1) {
    for (std::size_t s = 0; s < options.samples; ++s) evaluate(s);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = w; s < options.samples; s += workers) evaluate(s);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const Shape& shape = out_a.front().shape();
  if (shape != out_b.front().shape()) {
    throw ShapeError("compared activations differ in shape: " + shape_to_string(shape) +
                     " vs " + shape_to_string(out_b.front().shape()));
  }

  // Positions to compare; all of them unless in exact-interior mode.
  std::vector<bool> keep(shape_numel(shape), true);
  if (options.mode == VerifyMode::kExactInterior) {
    const auto ma = padding_free_mask(net_a, net_a.input_shape, options.compare_layer);
    const auto mb = padding_free_mask(net_b, net_b.input_shape, options.compare_layer);
    if (shape.size() == 3) {
      for (std::size_t c = 0; c < shape[0]; ++c)
        for (std::size_t y = 0; y < shape[1]; ++y)
          for (std::size_t x = 0; x < shape[2]; ++x)
            keep[(c * shape[1] + y) * shape[2] + x] =
                ma.rows[y] && mb.rows[y] && ma.cols[x] && mb.cols[x];
    } else {
      std::fill(keep.begin(), keep.end(), ma.rows.at(0) && mb.rows.at(0));
    }
  }
  report.total_elements = keep.size();
  report.compared_elements = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
  if (report.compared_elements == 0) {
    throw ShapeError("no padding-free region to compare at '" +
                     (options.compare_layer.empty() ? std::string("output")
                                                    : options.compare_layer) +
                     "'; compare an earlier layer or use statistical mode");
  }

  double ref_max = 0.0;
  for (std::size_t s = 0; s < options.samples; ++s) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      report.max_abs_diff = std::max(report.max_abs_diff, std::abs(out_a[s][i] - out_b[s][i]));
      ref_max = std::max(ref_max, std::abs(out_a[s][i]));
    }
  }
  report.max_rel_diff = ref_max > 0.0 ? report.max_abs_diff / ref_max
                                      : (report.max_abs_diff > 0.0 ? INFINITY : 0.0);
  report.pass = report.max_abs_diff <= report.tolerance.abs ||
                report.max_rel_diff <= report.tolerance.rel;
  return report;
}

ShapeCheck verify_shape_preservation(const NetworkSpec& net_a, const Chw& shape_a,
                                     const NetworkSpec& net_b, const Chw& shape_b,
                                     std::string_view from_layer) {
  auto [pass, rows] = zip_tails(infer_shapes(net_a, shape_a), infer_shapes(net_b, shape_b),
                                from_layer, [](const LayerShape& x, const LayerShape& y) {
                                  return x.output == y.output;
                                });
  ShapeCheck check;
  check.pass = pass;
  for (auto& [name, ra, rb, eq] : rows) {
    check.rows.push_back(
        {name, ra ? std::optional<Shape>(ra->output) : std::nullopt,
         rb ? std::optional<Shape>(rb->output) : std::nullopt, eq});
  }
  return check;
}

FlopsCheck verify_flops_preservation(const NetworkSpec& net_a, const Chw& shape_a,
                                     const NetworkSpec& net_b, const Chw& shape_b,
                                     std::string_view from_layer) {
  auto [pass, rows] =
      zip_tails(count_flops(net_a, shape_a).per_layer, count_flops(net_b, shape_b).per_layer,
                from_layer, [](const LayerCost& x, const LayerCost& y) {
                  return x.macs == y.macs && x.activation_elems == y.activation_elems;
                });
  FlopsCheck check;
  check.pass = pass;
  for (auto& [name, ra, rb, eq] : rows) check.rows.push_back({name, ra, rb, eq});
  return check;
}

json to_json(const std::vector<LayerShape>& shapes) {
  json arr = json::array();
  for (const auto& r : shapes) {
    json row{{"name", r.name},
             {"kind", std::string(layer_kind_name(r.kind))},
             {"input", shape_json(r.input)},
             {"output", shape_json(r.output)}};
    if (!r.parent.empty()) row["parent"] = r.parent;
    arr.push_back(std::move(row));
  }
  return arr;
}

json to_json(const PreservationReport& r) {
  return json{
      {"mode", std::string(verify_mode_name(r.mode))},
      {"samples", r.samples},
      {"compared_layer", r.compared_layer.empty() ? json(nullptr) : json(r.compared_layer)},
      {"compared_elements", r.compared_elements},
      {"total_elements", r.total_elements},
      {"max_abs_diff", r.max_abs_diff},
      {"max_rel_diff", std::isfinite(r.max_rel_diff) ? json(r.max_rel_diff) : json("inf")},
      {"tol_abs", r.tolerance.abs},
      {"tol_rel", r.tolerance.rel},
      {"dtype", std::string(dtype_name(r.dtype))},
      {"input_shape_a", r.input_shape_a},
      {"input_shape_b", r.input_shape_b},
      {"shapes_a", to_json(r.shapes_a)},
      {"shapes_b", to_json(r.shapes_b)},
      {"asserted", r.asserted},
      {"pass", r.pass},
  };
}

json to_json(const ShapeCheck& check) {
  json rows = json::array();
  for (const auto& r : check.rows) {
    rows.push_back({{"name", r.name},
                    {"shape_a", r.shape_a ? shape_json(*r.shape_a) : json(nullptr)},
                    {"shape_b", r.shape_b ? shape_json(*r.shape_b) : json(nullptr)},
                    {"equal", r.equal}});
  }
  return json{{"pass", check.pass}, {"rows", rows}};
}

json to_json(const FlopsCheck& check) {
  json rows = json::array();
  for (const auto& r : check.rows) {
    rows.push_back({{"name", r.name},
                    {"macs_a", r.cost_a ? json(r.cost_a->macs) : json(nullptr)},
                    {"macs_b", r.cost_b ? json(r.cost_b->macs) : json(nullptr)},
                    {"activation_elems_a",
                     r.cost_a ? json(r.cost_a->activation_elems) : json(nullptr)},
                    {"activation_elems_b",
                     r.cost_b ? json(r.cost_b->activation_elems) : json(nullptr)},
                    {"equal", r.equal}});
  }
  return json{{"pass", check.pass}, {"unit", kFlopsUnit}, {"rows", rows}};
}

json to_json(const FlopsReport& report) {
  json rows = json::array();
  for (const auto& c : report.per_layer) {
    json row{{"name", c.name},
             {"kind", std::string(layer_kind_name(c.kind))},
             {"macs", c.macs},
             {"elementwise_ops", c.elementwise_ops},
             {"activation_elems", c.activation_elems},
             {"param_elems", c.param_elems}};
    if (!c.parent.empty()) row["parent"] = c.parent;
    rows.push_back(std::move(row));
  }
  return json{{"unit", kFlopsUnit},
              {"per_layer", rows},
              {"totals",
               {{"macs", report.total_macs},
                {"elementwise_ops", report.total_elementwise_ops},
                {"activation_elems", report.total_activation_elems},
                {"param_elems", report.total_param_elems}}}};
}

}  // namespace netmorph
