#include "archattr/network.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <queue>
#include <set>

#include "archattr/error.hpp"

namespace archattr {
namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 8> kKindNames{{
    {LayerKind::Input, "Input"},
    {LayerKind::Convolution, "Convolution"},
    {LayerKind::Pooling, "Pooling"},
    {LayerKind::InnerProduct, "InnerProduct"},
    {LayerKind::ReLU, "ReLU"},
    {LayerKind::Sigmoid, "Sigmoid"},
    {LayerKind::Concat, "Concat"},
    {LayerKind::Output, "Output"},
}};

std::string describe(const LayerSpec& layer) {
  return "layer '" + layer.name + "' (" + std::string(to_string(layer.kind)) +
         ")";
}

void require(bool present, const LayerSpec& layer, std::string_view field) {
  if (!present) {
    throw Error(ErrorCode::MissingField,
                describe(layer) + " requires field " + std::string(field));
  }
}

void forbid(bool present, const LayerSpec& layer, std::string_view field) {
  if (present) {
    throw Error(ErrorCode::UnexpectedField,
                describe(layer) + " does not accept field " +
                    std::string(field));
  }
}

void check_positive(int value, const LayerSpec& layer, std::string_view field) {
  if (value < 1) {
    throw Error(ErrorCode::InvalidGraph, describe(layer) + ": " +
                                             std::string(field) +
                                             " must be >= 1");
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

void validate_layer(const LayerSpec& layer) {
  const LayerKind kind = layer.kind;
  const bool needs_window = has_window(kind);
  const bool needs_output =
      kind == LayerKind::Convolution || kind == LayerKind::InnerProduct;

  if (needs_window) {
    require(layer.window.has_value(), layer, "kernel_h/kernel_w/stride_h/stride_w");
    const Window& w = *layer.window;
    check_positive(w.kernel_h, layer, "kernel_h");
    check_positive(w.kernel_w, layer, "kernel_w");
    check_positive(w.stride_h, layer, "stride_h");
    check_positive(w.stride_w, layer, "stride_w");
    if (w.pad_h < 0 || w.pad_w < 0) {
      throw Error(ErrorCode::InvalidGraph,
                  describe(layer) + ": padding must be non-negative");
    }
  } else {
    forbid(layer.window.has_value(), layer, "kernel/stride/pad");
  }

  if (needs_output) {
    require(layer.num_output.has_value(), layer, "num_output");
    check_positive(*layer.num_output, layer, "num_output");
  } else {
    forbid(layer.num_output.has_value(), layer, "num_output");
  }

  if (kind == LayerKind::Input) {
    require(layer.input_shape.has_value(), layer, "input_dim");
    check_positive(layer.input_shape->height, layer, "input_dim");
    check_positive(layer.input_shape->width, layer, "input_dim");
    check_positive(layer.input_shape->channels, layer, "input_dim");
  } else {
    forbid(layer.input_shape.has_value(), layer, "input_dim");
  }

  if (kind != LayerKind::Pooling) {
    forbid(layer.pool_method.has_value(), layer, "pool");
  }
}

NetworkGraph NetworkGraph::build(std::vector<LayerSpec> layers,
                                 std::vector<Edge> edges,
                                 std::optional<std::string> population_tag) {
  NetworkGraph g;
  const std::size_t n = layers.size();
  if (n == 0) throw Error(ErrorCode::InvalidGraph, "network has no layers");

  std::set<std::string> names;
  for (const LayerSpec& layer : layers) {
    if (layer.name.empty()) {
      throw Error(ErrorCode::InvalidGraph, "layer with empty name");
    }
    if (!names.insert(layer.name).second) {
      throw Error(ErrorCode::DuplicateLayerName,
                  "duplicate layer name '" + layer.name + "'");
    }
    validate_layer(layer);
  }

  // Canonical edge order: by consumer, then producer.
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.second, a.first) < std::pair(b.second, b.first);
  });
  g.preds_.assign(n, {});
  g.succs_.assign(n, {});
  std::set<Edge> seen;
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) {
      throw Error(ErrorCode::DanglingReference, "edge references layer index out of range");
    }
    if (from == to) {
      throw Error(ErrorCode::Cycle, "layer '" + layers[from].name + "' feeds itself");
    }
    if (!seen.insert({from, to}).second) {
      throw Error(ErrorCode::InvalidGraph, "duplicate edge " + layers[from].name +
                                               " -> " + layers[to].name);
    }
    g.succs_[from].push_back(to);
    g.preds_[to].push_back(from);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.preds_[i].begin(), g.preds_[i].end());
    std::sort(g.succs_[i].begin(), g.succs_[i].end());
  }

  g.layers_ = std::move(layers);
  g.edges_ = std::move(edges);
  g.population_tag_ = std::move(population_tag);
  if (topological_order(g).size() != n) {
    throw Error(ErrorCode::Cycle, "network graph contains a cycle");
  }

  std::size_t num_inputs = 0;
  std::size_t num_outputs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& layer = g.layers_[i];
    const std::size_t in_deg = g.preds_[i].size();
    const std::size_t out_deg = g.succs_[i].size();
    if (layer.kind == LayerKind::Input) {
      ++num_inputs;
      if (in_deg != 0) {
        throw Error(ErrorCode::InvalidGraph, describe(layer) + " must not have inputs");
      }
    } else if (in_deg == 0) {
      throw Error(ErrorCode::InvalidGraph, describe(layer) + " has no inputs");
    }
    if (layer.kind == LayerKind::Output) {
      ++num_outputs;
      if (out_deg != 0) {
        throw Error(ErrorCode::InvalidGraph, describe(layer) + " must not have consumers");
      }
    } else if (out_deg == 0) {
      throw Error(ErrorCode::InvalidGraph, describe(layer) + " has no consumers");
    }
    if (in_deg > 1 && layer.kind != LayerKind::Concat) {
      throw Error(ErrorCode::InvalidGraph,
                  describe(layer) + " has several inputs; only Concat may merge");
    }
  }
  if (num_inputs == 0) throw Error(ErrorCode::InvalidGraph, "network has no Input layer");
  if (num_outputs == 0) throw Error(ErrorCode::InvalidGraph, "network has no Output layer");

  return g;
}

std::vector<LayerIndex> NetworkGraph::inputs() const {
  return layers_of(LayerKind::Input);
}

std::vector<LayerIndex> NetworkGraph::outputs() const {
  return layers_of(LayerKind::Output);
}

std::vector<LayerIndex> NetworkGraph::layers_of(LayerKind kind) const {
  std::vector<LayerIndex> out;
  for (LayerIndex i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == kind) out.push_back(i);
  }
  return out;
}

// Returns a partial order when the graph is cyclic; build() relies on that.
std::vector<LayerIndex> topological_order(const NetworkGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> in_degree(n);
  std::priority_queue<LayerIndex, std::vector<LayerIndex>, std::greater<>> ready;
  for (LayerIndex i = 0; i < n; ++i) {
    in_degree[i] = g.predecessors(i).size();
    if (in_degree[i] == 0) ready.push(i);
  }
  std::vector<LayerIndex> order;
  order.reserve(n);
  while (!ready.empty()) {
    const LayerIndex u = ready.top();
    ready.pop();
    order.push_back(u);
    for (LayerIndex v : g.successors(u)) {
      if (--in_degree[v] == 0) ready.push(v);
    }
  }
  return order;
}

std::vector<LayerPath> enumerate_io_paths(const NetworkGraph& g,
                                          std::size_t cap) {
  // Count first so an explosion is reported before any allocation.
  const auto order = topological_order(g);
  std::vector<double> paths_to_output(g.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const LayerIndex u = *it;
    if (g.layer(u).kind == LayerKind::Output) {
      paths_to_output[u] = 1.0;
      continue;
    }
    for (LayerIndex v : g.successors(u)) paths_to_output[u] += paths_to_output[v];
  }
  double total = 0.0;
  for (LayerIndex i : g.inputs()) total += paths_to_output[i];
  if (total > static_cast<double>(cap)) {
    throw Error(ErrorCode::PathExplosion,
                "network has more than " + std::to_string(cap) +
                    " input-to-output paths");
  }

  std::vector<LayerPath> paths;
  paths.reserve(static_cast<std::size_t>(total));
  LayerPath current;
  std::function<void(LayerIndex)> walk = [&](LayerIndex u) {
    current.push_back(u);
    if (g.layer(u).kind == LayerKind::Output) {
      paths.push_back(current);
    } else {
      for (LayerIndex v : g.successors(u)) walk(v);
    }
    current.pop_back();
  };
  for (LayerIndex i : g.inputs()) walk(i);
  return paths;
}

}  // namespace archattr
