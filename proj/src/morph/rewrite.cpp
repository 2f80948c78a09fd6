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
#include <cstdio>

#include "json.hpp"
#include "netmorph/morph.hpp"

namespace netmorph {

using nlohmann::json;

namespace {

constexpr std::string_view kRecordPrefix = "morph.";

std::string record_key(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", index);
  return std::string(kRecordPrefix) + buf;
}

// Replaces the node named `name` (anywhere in the tree) by `replacement`.
bool replace_node(std::vector<LayerNode>& chain, std::string_view name,
                  const std::vector<LayerNode>& replacement) {
  for (auto it = chain.begin(); it != chain.end(); ++it) {
    if (it->name == name) {
      it = chain.erase(it);
      chain.insert(it, replacement.begin(), replacement.end());
      return true;
    }
    if (it->kind() == LayerKind::kResidualBlock) {
      auto& r = it->as<ResidualAttrs>();
      if (replace_node(r.main, name, replacement) || replace_node(r.shortcut, name, replacement)) {
        return true;
      }
    }
  }
  return false;
}

// Output shapes keyed by node name, skipping `skip`.
std::vector<std::pair<std::string, Shape>> shape_trail(const std::vector<LayerShape>& rows,
                                                       const std::vector<std::string>& skip) {
  std::vector<std::pair<std::string, Shape>> out;
  for (const auto& r : rows) {
    if (std::find(skip.begin(), skip.end(), r.name) == skip.end()) {
      out.emplace_back(r.name, r.output);
    }
  }
  return out;
}

std::string unique_name(const NetworkSpec& net, const std::string& base) {
  if (!find_layer(net, base)) return base;
  for (int n = 2;; ++n) {
    std::string candidate = base + "_" + std::to_string(n);
    if (!find_layer(net, candidate)) return candidate;
  }
}

std::optional<MorphRecord> find_split_of_front(const NetworkSpec& net) {
  if (net.layers.empty()) return std::nullopt;
  for (const auto& rec : morph_history(net)) {
    if (rec.kind == "split_conv" && rec.inserted.size() == 4 &&
        rec.inserted.front() == net.layers.front().name) {
      return rec;
    }
  }
  return std::nullopt;
}

}  // namespace

SolverConfig solver_config_from_metadata(const std::map<std::string, std::string>& metadata,
                                         SolverConfig defaults) {
  auto read = [&](const char* key, auto parse) {
    auto it = metadata.find(key);
    if (it == metadata.end()) return;
    try {
      parse(it->second);
    } catch (const std::exception&) {
      throw SchemaError(std::string("metadata entry '") + key + "' is not a valid number");
    }
  };
  read("solver.tol", [&](const std::string& v) { defaults.tolerance = std::stod(v); });
  read("solver.max_iters", [&](const std::string& v) { defaults.max_iters = std::stoull(v); });
  read("solver.seed", [&](const std::string& v) { defaults.seed = std::stoull(v); });
  read("solver.ridge", [&](const std::string& v) { defaults.ridge = std::stod(v); });
  return defaults;
}

std::string MorphRecord::to_json() const {
  json j;
  j["kind"] = kind;
  j["source_layer"] = source_layer;
  j["inserted"] = inserted;
  j["residual"] = residual ? json(*residual) : json(nullptr);
  j["timestamp"] = timestamp;
  j["details"] = details;
  return j.dump();
}

MorphRecord MorphRecord::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    MorphRecord r;
    r.kind = j.at("kind").get<std::string>();
    r.source_layer = j.at("source_layer").get<std::string>();
    r.inserted = j.at("inserted").get<std::vector<std::string>>();
    if (!j.at("residual").is_null()) r.residual = j.at("residual").get<double>();
    r.timestamp = j.at("timestamp").get<std::uint64_t>();
    r.details = j.at("details").get<std::map<std::string, std::int64_t>>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed morph record: ") + e.what());
  }
}

std::vector<MorphRecord> morph_history(const NetworkSpec& net) {
  std::vector<MorphRecord> out;
  for (const auto& [key, value] : net.metadata) {
    if (key.starts_with(kRecordPrefix)) out.push_back(MorphRecord::from_json(value));
  }
  return out;
}

void append_record(NetworkSpec& net, MorphRecord record) {
  const std::size_t index = morph_history(net).size();
  record.timestamp = index;
  net.metadata[record_key(index)] = record.to_json();
}

SplitResult split_conv(const NetworkSpec& net, const WeightsStore& weights,
                       std::string_view layer, std::size_t k1, std::size_t k2,
                       std::size_t mid_channels, const SolverConfig& config) {
  const LayerNode* node = find_layer(net, layer);
  if (!node) throw MorphError("unknown layer '" + std::string(layer) + "'");
  if (node->kind() != LayerKind::kConv2d) {
    throw MorphError("layer '" + node->name + "' is a " +
                     std::string(layer_kind_name(node->kind())) + ", not a Conv2d");
  }
  const Conv2dAttrs orig = node->as<Conv2dAttrs>();
  const std::string name = node->name;
  const std::size_t kt = effective_kernel_size(k1, k2);
  if (k1 == 0 || k2 == 0 || kt < orig.kernel_size) {
    throw MorphError("split " + std::to_string(k1) + "+" + std::to_string(k2) + "-1=" +
                     std::to_string(kt) + " cannot cover kernel " +
                     std::to_string(orig.kernel_size));
  }
  const MorphCondition cond =
      check_morph_condition(orig.in_channels, orig.out_channels, mid_channels, k1, k2);
  if (!cond.holds) {
    throw MorphError("morph condition fails for '" + name + "': max(" +
                     std::to_string(cond.lhs_first) + ", " + std::to_string(cond.lhs_second) +
                     ") < " + std::to_string(cond.rhs));
  }

  const ConvParams params = conv_params(*node, weights);
  const DType dtype = params.kernel.dtype();

  FactorizationProblem problem{params.kernel.cast(DType::kF64), mid_channels, k1, k2, config};
  FactorizationResult fact = solve_kernel_factorization(problem);
  if (!fact.converged) {
    throw MorphError("factorization of '" + name + "' did not converge: residual " +
                     std::to_string(fact.residual) + " after " +
                     std::to_string(fact.iterations) + " iterations (tolerance " +
                     std::to_string(config.tolerance) + ")");
  }

  const std::size_t total_pad = orig.padding + (kt - orig.kernel_size) / 2;
  const std::size_t p1 = total_pad / 2;
  const std::size_t p2 = total_pad - p1;

  const std::vector<std::string> inserted = {name + "_1", name + "_1_bn", name + "_1_prelu",
                                             name + "_2"};
  for (const auto& n : inserted) {
    if (find_layer(net, n)) {
      throw MorphError("cannot split '" + name + "': layer name '" + n + "' already in use");
    }
  }

  const BatchNormParams bn = make_identity_batchnorm(mid_channels, 1e-5, dtype);
  std::vector<LayerNode> replacement = {
      {inserted[0], Conv2dAttrs{orig.in_channels, mid_channels, k1, 1, p1, false}},
      {inserted[1], BatchNormAttrs{mid_channels, bn.epsilon}},
      {inserted[2], ActivationAttrs{ActivationMode::kPrelu}},
      {inserted[3],
       Conv2dAttrs{mid_channels, orig.out_channels, k2, orig.stride, p2, orig.has_bias}},
  };

  SplitResult result;
  result.net = net;
  replace_node(result.net.layers, name, replacement);

  try {
    validate(result.net);
  } catch (const std::exception& e) {
    throw MorphError("split of '" + name + "' yields an invalid network: " + e.what());
  }
  // The second conv takes the original's place in the trail.
  auto after = shape_trail(infer_shapes(result.net), {inserted[0], inserted[1], inserted[2]});
  for (auto& [n, s] : after) {
    if (n == inserted[3]) n = name;
  }
  if (after != shape_trail(infer_shapes(net), {})) {
    throw MorphError("split of '" + name + "' changed downstream shapes");
  }

  result.weights = weights;
  result.weights.erase(conv_weight_name(name));
  result.weights.erase(conv_bias_name(name));
  result.weights[conv_weight_name(inserted[0])] = fact.first.cast(dtype);
  result.weights[bn_gamma_name(inserted[1])] = bn.gamma;
  result.weights[bn_beta_name(inserted[1])] = bn.beta;
  result.weights[bn_mean_name(inserted[1])] = bn.running_mean;
  result.weights[bn_var_name(inserted[1])] = bn.running_var;
  result.weights[prelu_slope_name(inserted[2])] =
      Tensor::scalar(*make_identity_prelu().slope, dtype);
  result.weights[conv_weight_name(inserted[3])] = fact.second.cast(dtype);
  if (params.bias) result.weights[conv_bias_name(inserted[3])] = *params.bias;

  MorphRecord rec;
  rec.kind = "split_conv";
  rec.source_layer = name;
  rec.inserted = inserted;
  rec.residual = fact.residual;
  rec.details = {
      {"kernel_size", static_cast<std::int64_t>(orig.kernel_size)},
      {"k1", static_cast<std::int64_t>(k1)},
      {"k2", static_cast<std::int64_t>(k2)},
      {"mid_channels", static_cast<std::int64_t>(mid_channels)},
      {"stride", static_cast<std::int64_t>(orig.stride)},
      {"padding", static_cast<std::int64_t>(orig.padding)},
      {"padding_first", static_cast<std::int64_t>(p1)},
      {"padding_second", static_cast<std::int64_t>(p2)},
      {"iterations", static_cast<std::int64_t>(fact.iterations)},
      {"condition_lhs_first", static_cast<std::int64_t>(cond.lhs_first)},
      {"condition_lhs_second", static_cast<std::int64_t>(cond.lhs_second)},
      {"condition_rhs", static_cast<std::int64_t>(cond.rhs)},
      {"condition_rhs_mid_form", static_cast<std::int64_t>(cond.rhs_mid_form)},
  };
  append_record(result.net, rec);
  result.record = morph_history(result.net).back();
  result.condition = cond;
  result.factorization = std::move(fact);
  return result;
}

PromoteResult promote_resolution(const NetworkSpec& net, const WeightsStore& weights,
                                 const SolverConfig& config) {
  if (net.layers.empty() || net.layers.front().kind() != LayerKind::kConv2d) {
    throw MorphError("front not recognisable: the first layer must be a Conv2d");
  }

  PromoteResult result;
  result.shapes_before = infer_shapes(net);

  NetworkSpec work = net;
  WeightsStore work_weights = weights;
  std::optional<MorphRecord> split = find_split_of_front(work);
  if (!split) {
    const auto& conv = work.layers.front().as<Conv2dAttrs>();
    SplitResult s = split_conv(work, work_weights, work.layers.front().name, 5, 3,
                               conv.out_channels, config);
    work = std::move(s.net);
    work_weights = std::move(s.weights);
    result.records.push_back(s.record);
    split = s.record;
  }
  const std::string first_name = split->inserted.front();
  const std::string second_name = split->inserted.back();

  // Output shape of the front before promotion: the second conv of an
  // existing split, or the original conv when the split happened here.
  const std::string reference_name = result.records.empty() ? second_name : split->source_layer;
  Shape reference_shape;
  for (const auto& row : result.shapes_before) {
    if (row.name == reference_name) reference_shape = row.output;
  }

  std::size_t group_end = 1;
  while (group_end < work.layers.size() &&
         (work.layers[group_end].kind() == LayerKind::kBatchNorm2d ||
          work.layers[group_end].kind() == LayerKind::kActivation)) {
    ++group_end;
  }
  std::size_t second_index = group_end;
  while (second_index < work.layers.size() &&
         work.layers[second_index].kind() == LayerKind::kMaxPool2d) {
    ++second_index;
  }
  if (second_index >= work.layers.size() || work.layers[second_index].name != second_name) {
    throw MorphError("front not recognisable: expected '" + second_name +
                     "' after the first conv group and its pooling layers");
  }

  auto& first = work.layers.front().as<Conv2dAttrs>();
  first.stride = 2;
  first.padding = first.kernel_size / 2;
  auto& second = work.layers[second_index].as<Conv2dAttrs>();
  second.stride = 1;
  second.padding = second.kernel_size / 2;

  const std::string pool_name = unique_name(work, first_name + "_pool");
  work.layers.insert(work.layers.begin() + static_cast<std::ptrdiff_t>(group_end),
                     LayerNode{pool_name, MaxPoolAttrs{2, 2}});
  work.input_shape[1] *= 2;
  work.input_shape[2] *= 2;

  try {
    result.shapes_after = infer_shapes(work);
  } catch (const ShapeError& e) {
    throw MorphError(std::string("promotion yields invalid shapes: ") + e.what());
  }
  Shape promoted_shape;
  for (const auto& row : result.shapes_after) {
    if (row.name == second_name) promoted_shape = row.output;
  }
  if (promoted_shape != reference_shape) {
    throw MorphError("promotion changes the front output: '" + second_name + "' yields " +
                     shape_to_string(promoted_shape) + ", expected " +
                     shape_to_string(reference_shape));
  }

  MorphRecord rec;
  rec.kind = "promote_resolution";
  rec.source_layer = first_name;
  rec.inserted = {pool_name};
  rec.details = {
      {"input_height_before", static_cast<std::int64_t>(net.input_shape[1])},
      {"input_width_before", static_cast<std::int64_t>(net.input_shape[2])},
      {"input_height_after", static_cast<std::int64_t>(work.input_shape[1])},
      {"input_width_after", static_cast<std::int64_t>(work.input_shape[2])},
  };
  append_record(work, rec);
  result.records.push_back(morph_history(work).back());
  result.net = std::move(work);
  result.weights = std::move(work_weights);
  return result;
}

std::size_t verify_effective_kernel(const NetworkSpec& net, std::string_view source_layer) {
  for (const auto& rec : morph_history(net)) {
    if (rec.kind != "split_conv" || rec.source_layer != source_layer) continue;
    const LayerNode* first = find_layer(net, rec.inserted.front());
    const LayerNode* second = find_layer(net, rec.inserted.back());
    if (!first || !second || first->kind() != LayerKind::kConv2d ||
        second->kind() != LayerKind::kConv2d) {
      throw MorphError("split of '" + std::string(source_layer) +
                       "' is no longer present in the network");
    }
    const std::size_t kt = effective_kernel_size(first->as<Conv2dAttrs>().kernel_size,
                                                 second->as<Conv2dAttrs>().kernel_size);
    const auto k = static_cast<std::size_t>(rec.details.at("kernel_size"));
    const auto recorded_kt = effective_kernel_size(static_cast<std::size_t>(rec.details.at("k1")),
                                                   static_cast<std::size_t>(rec.details.at("k2")));
    if (recorded_kt == k && kt != k) {
      throw MorphError("effective kernel " + std::to_string(kt) + " of '" +
                       std::string(source_layer) + "' differs from original kernel " +
                       std::to_string(k));
    }
    return kt;
  }
  throw MorphError("no split recorded for layer '" + std::string(source_layer) + "'");
}

}  // namespace netmorph
