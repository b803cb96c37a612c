// Copyright 2026 The evonas Authors.
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

/// @file decoder.hpp
/// Genome -> computation graph, shape inference, and layer/parameter
/// accounting.
///
/// A skip gene S(f1, f2) entered with `c` channels decodes to
///
///     in --> Conv3x3(c->f1) --> Conv3x3(f1->f2) --> Add
///      \-----------[Conv1x1(c->f2) if c != f2]----/
///
/// A pool gene decodes to a 2x2 pooling node with the configured stride. The
/// head is a global average pool followed by one Linear layer.

#pragma once

#include <cstdint>
#include <deque>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "evonas/error.hpp"
#include "evonas/genome.hpp"

namespace evonas {

struct InputNode {
  TensorShape shape;
  friend bool operator==(const InputNode&, const InputNode&) = default;
};

/// Stride 1; padding kernel / 2 keeps spatial dims.
struct ConvNode {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  friend bool operator==(const ConvNode&, const ConvNode&) = default;
};

struct AddNode {
  friend bool operator==(const AddNode&, const AddNode&) = default;
};

struct PoolNode {
  PoolKind kind = PoolKind::max;
  int window = 2;
  int stride = 2;
  friend bool operator==(const PoolNode&, const PoolNode&) = default;
};

struct GlobalAvgPoolNode {
  friend bool operator==(const GlobalAvgPoolNode&, const GlobalAvgPoolNode&) = default;
};

struct LinearNode {
  int in_features = 0;
  int out_features = 0;
  friend bool operator==(const LinearNode&, const LinearNode&) = default;
};

using Node = std::variant<InputNode, ConvNode, AddNode, PoolNode,
                          GlobalAvgPoolNode, LinearNode>;

using Edge = std::pair<std::size_t, std::size_t>;

/// Nodes are stored in a topological order with the Input at index 0.
/// `shapes[i]` is the output shape of node i, filled by decode().
struct ArchitectureGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<TensorShape> shapes;
  friend bool operator==(const ArchitectureGraph&, const ArchitectureGraph&) = default;
};

// ---------------------------------------------------------------------------
// Shape inference

namespace detail {

inline TensorShape pooled(const TensorShape& in, const PoolNode& pool) {
  if (pool.window < 1 || pool.stride < 1) {
    throw DecodeError("pooling window and stride must be >= 1");
  }
  if (in.height < pool.window || in.width < pool.window) {
    throw ShapeError("pooling window " + std::to_string(pool.window) + "x" +
                     std::to_string(pool.window) + " does not fit input " +
                     to_string(in));
  }
  return TensorShape{in.channels, (in.height - pool.window) / pool.stride + 1,
                     (in.width - pool.window) / pool.stride + 1};
}

}  // namespace detail

/// Output shape of every node, evaluated in topological order of `edges`
/// (the node storage order is not relied upon). Also checks the structural
/// invariants: one Input, a single Linear sink, acyclicity, and node arity.
inline std::vector<TensorShape> infer_shapes(const ArchitectureGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<std::vector<std::size_t>> inputs(n);
  std::vector<std::vector<std::size_t>> outputs(n);
  for (const auto& [from, to] : graph.edges) {
    if (from >= n || to >= n) throw DecodeError("edge references a missing node");
    inputs[to].push_back(from);
    outputs[from].push_back(to);
  }

  std::size_t input_nodes = 0;
  std::size_t linear_nodes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_input = std::holds_alternative<InputNode>(graph.nodes[i]);
    const bool is_linear = std::holds_alternative<LinearNode>(graph.nodes[i]);
    input_nodes += is_input ? 1 : 0;
    linear_nodes += is_linear ? 1 : 0;
    if (outputs[i].empty() && !is_linear) {
      throw DecodeError("node " + std::to_string(i) + " has no consumer");
    }
    if (is_linear && !outputs[i].empty()) {
      throw DecodeError("Linear node must be terminal");
    }
  }
  if (input_nodes != 1) throw DecodeError("graph must have exactly one Input node");
  if (linear_nodes != 1) throw DecodeError("graph must have exactly one Linear node");

  std::vector<std::size_t> pending(n);
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = inputs[i].size();
    if (pending[i] == 0) ready.push_back(i);
  }

  std::vector<TensorShape> shapes(n);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t i = ready.front();
    ready.pop_front();
    ++visited;
    const auto& in = inputs[i];
    auto expect_arity = [&](std::size_t arity, const char* what) {
      if (in.size() != arity) {
        throw DecodeError(std::string(what) + " node " + std::to_string(i) +
                          " expects " + std::to_string(arity) + " input(s), has " +
                          std::to_string(in.size()));
      }
    };

    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, InputNode>) {
            expect_arity(0, "Input");
            shapes[i] = node.shape;
          } else if constexpr (std::is_same_v<T, ConvNode>) {
            expect_arity(1, "Conv");
            const auto& src = shapes[in[0]];
            if (src.channels != node.in_channels) {
              throw ShapeError("Conv node " + std::to_string(i) + " expects " +
                               std::to_string(node.in_channels) +
                               " input channels, receives " + to_string(src));
            }
            if (node.kernel != 1 && node.kernel != 3) {
              throw DecodeError("unsupported convolution kernel " +
                                std::to_string(node.kernel));
            }
            shapes[i] = TensorShape{node.out_channels, src.height, src.width};
          } else if constexpr (std::is_same_v<T, AddNode>) {
            expect_arity(2, "Add");
            if (!(shapes[in[0]] == shapes[in[1]])) {
              throw ShapeError("Add node " + std::to_string(i) +
                               " receives mismatched shapes " +
                               to_string(shapes[in[0]]) + " and " +
                               to_string(shapes[in[1]]));
            }
            shapes[i] = shapes[in[0]];
          } else if constexpr (std::is_same_v<T, PoolNode>) {
            expect_arity(1, "Pool");
            shapes[i] = detail::pooled(shapes[in[0]], node);
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
            expect_arity(1, "GlobalAvgPool");
            shapes[i] = TensorShape{shapes[in[0]].channels, 1, 1};
          } else {
            expect_arity(1, "Linear");
            if (shapes[in[0]].channels != node.in_features) {
              throw ShapeError("Linear node expects " +
                               std::to_string(node.in_features) +
                               " features, receives " + to_string(shapes[in[0]]));
            }
            shapes[i] = TensorShape{node.out_features, 1, 1};
          }
        },
        graph.nodes[i]);

    for (std::size_t next : outputs[i]) {
      if (--pending[next] == 0) ready.push_back(next);
    }
  }
  if (visited != n) throw DecodeError("graph contains a cycle");
  return shapes;
}

// ---------------------------------------------------------------------------
// Decoding

inline ArchitectureGraph decode(const Genome& genome, const SearchSpaceConfig& cfg) {
  if (auto problems = validate(genome, cfg); !problems.empty()) {
    std::string message = "invalid genome '" + serialize(genome) + "':";
    for (const auto& p : problems) message += " " + p + ";";
    throw DecodeError(message);
  }

  ArchitectureGraph graph;
  auto add_node = [&graph](Node node) {
    graph.nodes.push_back(std::move(node));
    return graph.nodes.size() - 1;
  };
  auto connect = [&graph](std::size_t from, std::size_t to) {
    graph.edges.emplace_back(from, to);
  };

  std::size_t current = add_node(InputNode{cfg.input_shape});
  int channels = cfg.input_shape.channels;
  for (const auto& gene : genome) {
    if (const auto* skip = std::get_if<SkipGene>(&gene)) {
      const std::size_t block_in = current;
      const auto conv1 = add_node(ConvNode{channels, skip->f1, 3});
      connect(block_in, conv1);
      const auto conv2 = add_node(ConvNode{skip->f1, skip->f2, 3});
      connect(conv1, conv2);
      std::size_t shortcut = block_in;
      if (channels != skip->f2) {
        shortcut = add_node(ConvNode{channels, skip->f2, 1});
        connect(block_in, shortcut);
      }
      const auto sum = add_node(AddNode{});
      connect(conv2, sum);
      connect(shortcut, sum);
      current = sum;
      channels = skip->f2;
    } else {
      const auto pool = add_node(
          PoolNode{std::get<PoolGene>(gene).kind, 2, cfg.pool_stride});
      connect(current, pool);
      current = pool;
    }
  }
  const auto gap = add_node(GlobalAvgPoolNode{});
  connect(current, gap);
  const auto head = add_node(LinearNode{channels, cfg.num_classes});
  connect(gap, head);

  graph.shapes = infer_shapes(graph);
  return graph;
}

// ---------------------------------------------------------------------------
// Accounting

/// Weights plus biases. Pool, Add and GlobalAvgPool nodes carry none.
inline std::uint64_t count_params(const ArchitectureGraph& graph) {
  std::uint64_t total = 0;
  for (const auto& node : graph.nodes) {
    if (const auto* conv = std::get_if<ConvNode>(&node)) {
      const auto k = static_cast<std::uint64_t>(conv->kernel);
      total += k * k * static_cast<std::uint64_t>(conv->in_channels) *
                   static_cast<std::uint64_t>(conv->out_channels) +
               static_cast<std::uint64_t>(conv->out_channels);
    } else if (const auto* linear = std::get_if<LinearNode>(&node)) {
      total += static_cast<std::uint64_t>(linear->in_features) *
                   static_cast<std::uint64_t>(linear->out_features) +
               static_cast<std::uint64_t>(linear->out_features);
    }
  }
  return total;
}

/// Two per skip gene (its 3x3 convolutions) plus one per pool gene.
/// Projections and the classifier head are not counted.
inline std::size_t count_layers(const Genome& genome) {
  return 2 * genome.skip_count() + genome.pool_count();
}

// ---------------------------------------------------------------------------
// Rendering and the architecture document

namespace detail {

inline nlohmann::json shape_json(const TensorShape& s) {
  return nlohmann::json::array({s.channels, s.height, s.width});
}

inline std::string node_label(const Node& node) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, InputNode>) {
          return "Input";
        } else if constexpr (std::is_same_v<T, ConvNode>) {
          return "Conv" + std::to_string(n.kernel) + "x" + std::to_string(n.kernel) +
                 " " + std::to_string(n.in_channels) + "->" +
                 std::to_string(n.out_channels);
        } else if constexpr (std::is_same_v<T, AddNode>) {
          return "Add";
        } else if constexpr (std::is_same_v<T, PoolNode>) {
          return std::string(n.kind == PoolKind::max ? "MaxPool" : "MeanPool") +
                 " 2x2/" + std::to_string(n.stride);
        } else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
          return "GlobalAvgPool";
        } else {
          return "Linear " + std::to_string(n.in_features) + "->" +
                 std::to_string(n.out_features);
        }
      },
      node);
}

template <typename T>
T required(const nlohmann::json& object, const char* key, const char* where) {
  if (!object.is_object() || !object.contains(key)) {
    throw DecodeError(std::string("architecture: ") + where + " is missing '" +
                      key + "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DecodeError(std::string("architecture: ") + where + " has a malformed '" +
                      key + "'");
  }
}

}  // namespace detail

/// Architecture document shared with evaluator workers:
///   {"input": [c,h,w], "classes": n,
///    "nodes": [{"op": "conv"|"pool"|"add"|"gap"|"linear", ...}],
///    "edges": [[from, to], ...]}
/// Nodes are listed in topological order and indexed from 0; the network
/// input is not a node and appears as index -1 in edges. Every node carries
/// its inferred output "shape".
inline nlohmann::json to_json(const ArchitectureGraph& graph) {
  using nlohmann::json;
  const auto& input = std::get<InputNode>(graph.nodes.at(0)).shape;
  json nodes = json::array();
  int classes = 0;
  for (std::size_t i = 1; i < graph.nodes.size(); ++i) {
    json entry = std::visit(
        [&classes](const auto& n) -> json {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ConvNode>) {
            return {{"op", "conv"}, {"in", n.in_channels}, {"out", n.out_channels},
                    {"kernel", n.kernel}, {"stride", 1}, {"padding", n.kernel / 2}};
          } else if constexpr (std::is_same_v<T, AddNode>) {
            return {{"op", "add"}};
          } else if constexpr (std::is_same_v<T, PoolNode>) {
            return {{"op", "pool"}, {"kind", std::string(to_string(n.kind))},
                    {"window", n.window}, {"stride", n.stride}};
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
            return {{"op", "gap"}};
          } else if constexpr (std::is_same_v<T, LinearNode>) {
            classes = n.out_features;
            return {{"op", "linear"}, {"in", n.in_features}, {"out", n.out_features}};
          } else {
            throw DecodeError("Input node must be the first node");
          }
        },
        graph.nodes[i]);
    if (i < graph.shapes.size()) entry["shape"] = detail::shape_json(graph.shapes[i]);
    nodes.push_back(std::move(entry));
  }
  json edges = json::array();
  for (const auto& [from, to] : graph.edges) {
    edges.push_back({static_cast<long long>(from) - 1, static_cast<long long>(to) - 1});
  }
  return {{"input", detail::shape_json(input)},
          {"classes", classes},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

/// Inverse of to_json(). Checks the schema and re-runs shape inference.
inline ArchitectureGraph graph_from_json(const nlohmann::json& doc) {
  using detail::required;
  ArchitectureGraph graph;
  const auto input = required<std::vector<int>>(doc, "input", "document");
  if (input.size() != 3) throw DecodeError("architecture: input must be [c, h, w]");
  graph.nodes.emplace_back(InputNode{TensorShape{input[0], input[1], input[2]}});
  const int classes = required<int>(doc, "classes", "document");

  const auto nodes = required<nlohmann::json>(doc, "nodes", "document");
  if (!nodes.is_array()) throw DecodeError("architecture: nodes must be an array");
  for (const auto& entry : nodes) {
    const auto op = required<std::string>(entry, "op", "node");
    if (op == "conv") {
      graph.nodes.emplace_back(ConvNode{required<int>(entry, "in", "conv node"),
                                        required<int>(entry, "out", "conv node"),
                                        required<int>(entry, "kernel", "conv node")});
    } else if (op == "add") {
      graph.nodes.emplace_back(AddNode{});
    } else if (op == "pool") {
      const auto kind = required<std::string>(entry, "kind", "pool node");
      if (kind != "max" && kind != "mean") {
        throw DecodeError("architecture: unknown pool kind '" + kind + "'");
      }
      graph.nodes.emplace_back(PoolNode{kind == "max" ? PoolKind::max : PoolKind::mean,
                                        required<int>(entry, "window", "pool node"),
                                        required<int>(entry, "stride", "pool node")});
    } else if (op == "gap") {
      graph.nodes.emplace_back(GlobalAvgPoolNode{});
    } else if (op == "linear") {
      graph.nodes.emplace_back(LinearNode{required<int>(entry, "in", "linear node"),
                                          required<int>(entry, "out", "linear node")});
    } else {
      throw DecodeError("architecture: unknown op '" + op + "'");
    }
  }

  const auto edges = required<std::vector<std::vector<long long>>>(doc, "edges", "document");
  const auto limit = static_cast<long long>(graph.nodes.size()) - 1;
  for (const auto& edge : edges) {
    if (edge.size() != 2 || edge[0] < -1 || edge[1] < 0 || edge[0] >= limit ||
        edge[1] >= limit) {
      throw DecodeError("architecture: malformed edge");
    }
    graph.edges.emplace_back(static_cast<std::size_t>(edge[0] + 1),
                             static_cast<std::size_t>(edge[1] + 1));
  }
  graph.shapes = infer_shapes(graph);
  for (const auto& node : graph.nodes) {
    if (const auto* linear = std::get_if<LinearNode>(&node);
        linear && linear->out_features != classes) {
      throw DecodeError("architecture: Linear output does not match classes");
    }
  }
  return graph;
}

enum class RenderFormat { dot, json };

inline std::string render_dot(const ArchitectureGraph& graph) {
  std::ostringstream out;
  out << "digraph architecture {\n  rankdir=TB;\n  node [shape=box];\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    out << "  n" << i << " [label=\"" << detail::node_label(graph.nodes[i]);
    if (i < graph.shapes.size()) out << "\\n" << to_string(graph.shapes[i]);
    out << "\"];\n";
  }
  for (const auto& [from, to] : graph.edges) {
    out << "  n" << from << " -> n" << to << ";\n";
  }
  out << "}\n";
  return out.str();
}

inline std::string render(const ArchitectureGraph& graph, RenderFormat format) {
  if (format == RenderFormat::dot) return render_dot(graph);
  return to_json(graph).dump(2) + "\n";
}

}  // namespace evonas
