#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace archattr {

enum class LayerKind {
  Input,
  Convolution,
  Pooling,
  InnerProduct,
  ReLU,
  Sigmoid,
  Concat,
  Output,
};

std::string_view to_string(LayerKind kind) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view text) noexcept;

inline bool is_activation(LayerKind kind) noexcept {
  return kind == LayerKind::ReLU || kind == LayerKind::Sigmoid;
}

inline bool has_window(LayerKind kind) noexcept {
  return kind == LayerKind::Convolution || kind == LayerKind::Pooling;
}

enum class PoolMethod { Max, Avg };

// Sliding-window geometry shared by Convolution and Pooling layers.
struct Window {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

struct InputShape {
  int height = 1;
  int width = 1;
  int channels = 1;

  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Input;
  std::optional<Window> window;          // Convolution, Pooling
  std::optional<int> num_output;         // Convolution, InnerProduct
  std::optional<InputShape> input_shape; // Input
  std::optional<PoolMethod> pool_method; // Pooling (informational)

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using LayerIndex = std::size_t;
using Edge = std::pair<LayerIndex, LayerIndex>;
using LayerPath = std::vector<LayerIndex>;

// Throws Error(InvalidGraph / MissingField / UnexpectedField) when the
// kind-specific fields of `layer` are inconsistent with its kind.
void validate_layer(const LayerSpec& layer);

// Immutable, validated layer DAG. Layers keep their declaration order.
class NetworkGraph {
 public:
  // Validates every structural invariant; throws archattr::Error on failure.
  static NetworkGraph build(std::vector<LayerSpec> layers,
                            std::vector<Edge> edges,
                            std::optional<std::string> population_tag = {});

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const LayerSpec& layer(LayerIndex i) const { return layers_.at(i); }
  std::size_t size() const noexcept { return layers_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::optional<std::string>& population_tag() const noexcept {
    return population_tag_;
  }

  // Adjacency lists are sorted by layer index.
  const std::vector<LayerIndex>& predecessors(LayerIndex i) const {
    return preds_.at(i);
  }
  const std::vector<LayerIndex>& successors(LayerIndex i) const {
    return succs_.at(i);
  }

  std::vector<LayerIndex> inputs() const;
  std::vector<LayerIndex> outputs() const;
  std::vector<LayerIndex> layers_of(LayerKind kind) const;

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;

 private:
  NetworkGraph() = default;

  std::vector<LayerSpec> layers_;
  std::vector<Edge> edges_;
  std::optional<std::string> population_tag_;
  std::vector<std::vector<LayerIndex>> preds_;
  std::vector<std::vector<LayerIndex>> succs_;
};

// Kahn's algorithm; among ready layers the lowest file index goes first.
std::vector<LayerIndex> topological_order(const NetworkGraph& g);

// All Input -> Output paths as full layer sequences, in lexicographic order.
// Throws Error(PathExplosion) instead of truncating when more than `cap`
// paths exist.
std::vector<LayerPath> enumerate_io_paths(const NetworkGraph& g,
                                          std::size_t cap);

}  // namespace archattr
