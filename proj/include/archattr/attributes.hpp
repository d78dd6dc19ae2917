#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "archattr/network.hpp"
#include "archattr/shape.hpp"

namespace archattr {

inline constexpr std::size_t kNumAttributes = 30;

// Canonical column order. Never reorder: CSV files and reports depend on it.
inline constexpr std::array<std::string_view, kNumAttributes> kAttributeNames{
    "net_depth_avg",
    "num_conv_layers",
    "num_pooling_layers",
    "avg_IP_neurons",
    "avg_IP_weights",
    "num_conv_features",
    "prop_conv_into_pool",
    "prop_pool_into_pool",
    "prop_1x1_kernels",
    "prop_square_kernels",
    "prop_horiz_kernels",
    "prop_vert_kernels",
    "num_relu",
    "num_sigmoid",
    "avg_grid_reduction_area_consecutive",
    "avg_grid_reduction_height_consecutive",
    "avg_grid_reduction_width_consecutive",
    "avg_grid_reduction_area_total",
    "avg_grid_reduction_height_total",
    "avg_grid_reduction_width_total",
    "prop_nonoverlapping",
    "avg_stride_h",
    "avg_stride_w",
    "avg_ratio_features_to_depth",
    "avg_ratio_features_to_kerArea",
    "avg_ratio_features_to_kerHeight",
    "avg_ratio_features_to_kerWidth",
    "avg_ratio_kerArea_to_depth",
    "avg_ratio_kerHeight_to_depth",
    "avg_ratio_kerWidth_to_depth",
};

// Position of `name` in kAttributeNames, if it is a canonical attribute.
std::optional<std::size_t> attribute_index(std::string_view name) noexcept;

struct AttributeVector {
  std::string network_id;
  std::array<double, kNumAttributes> values{};
  // Set when the attribute's population is empty (the value is then 0).
  std::array<bool, kNumAttributes> undefined{};
  std::optional<double> accuracy;

  double operator[](std::string_view name) const;
};

// Mean layer count over all Input -> Output paths, by dynamic programming.
double average_depth(const NetworkGraph& g);

// Per layer: mean layer count over all Input -> layer paths (inclusive).
std::vector<double> layer_depths(const NetworkGraph& g);

struct LayerCounts {
  int num_conv_layers = 0;
  int num_pooling_layers = 0;
  int num_relu = 0;
  int num_sigmoid = 0;
  double num_conv_features = 0.0;
  double avg_IP_neurons = 0.0;
  double avg_IP_weights = 0.0;
  int num_inner_product = 0;
};
LayerCounts layer_counts(const NetworkGraph& g, const ShapeTable& shapes);

struct SuccessionProps {
  double prop_conv_into_pool = 0.0;
  double prop_pool_into_pool = 0.0;
};
SuccessionProps succession_props(const NetworkGraph& g);

struct KernelShapeProps {
  double prop_1x1_kernels = 0.0;
  double prop_square_kernels = 0.0;
  double prop_horiz_kernels = 0.0;
  double prop_vert_kernels = 0.0;
  double prop_nonoverlapping = 0.0;
  double avg_stride_h = 0.0;
  double avg_stride_w = 0.0;
};
KernelShapeProps kernel_shape_props(const NetworkGraph& g);

using LayerPair = std::pair<LayerIndex, LayerIndex>;

// (A, B) with A a Convolution reaching Convolution B through no other
// Convolution. Sorted.
std::vector<LayerPair> consecutive_conv_pairs(const NetworkGraph& g);

// (Input, F) with F a Convolution reachable from the Input that is the last
// Convolution on at least one path to an Output. Sorted.
std::vector<LayerPair> input_to_final_conv_pairs(const NetworkGraph& g);

struct GridReductions {
  double area_consecutive = 0.0;
  double height_consecutive = 0.0;
  double width_consecutive = 0.0;
  double area_total = 0.0;
  double height_total = 0.0;
  double width_total = 0.0;
  bool consecutive_defined = false;
  bool total_defined = false;
};
GridReductions grid_reductions(const NetworkGraph& g, const ShapeTable& shapes);

struct RatioAttributes {
  double features_to_depth = 0.0;
  double features_to_kerArea = 0.0;
  double features_to_kerHeight = 0.0;
  double features_to_kerWidth = 0.0;
  double kerArea_to_depth = 0.0;
  double kerHeight_to_depth = 0.0;
  double kerWidth_to_depth = 0.0;
};
RatioAttributes ratio_attributes(const NetworkGraph& g, const ShapeTable& shapes);

// Runs shape inference and every extractor. Shape errors are rethrown with
// the network id prepended.
AttributeVector extract_attributes(const NetworkGraph& g, std::string network_id = {});

}  // namespace archattr
