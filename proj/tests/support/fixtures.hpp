#pragma once

// Hand-worked attribute fixtures. Each expected value is written as the
// arithmetic done by hand (shapes, path lengths and pair lists are listed in
// the comments), so a mismatch points at a specific hand step.

#include <map>
#include <string>

namespace testsupport {

// data 28x28x1 -> conv1 5x5/1 f6 (24x24) -> relu1 -> pool1 2x2/2 (12x12)
// -> conv2 5x3/1 f16 (8x10) -> sig2 -> pool2 2x2/2 (4x5x16 = 320)
// -> ip1 120 -> relu3 -> ip2 10 -> out. One path of 11 layers.
inline const char* kLeNetText = R"(# LeNet-style chain
layer { name: "data" type: "Input" input_dim: 28 input_dim: 28 input_dim: 1 }
layer { name: "conv1" type: "Convolution" bottom: "data"
        kernel_h: 5 kernel_w: 5 stride_h: 1 stride_w: 1 num_output: 6 }
layer { name: "relu1" type: "ReLU" bottom: "conv1" }
layer { name: "pool1" type: "Pooling" bottom: "relu1"
        kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 pool: MAX }
layer { name: "conv2" type: "Convolution" bottom: "pool1"
        kernel_h: 5 kernel_w: 3 stride_h: 1 stride_w: 1 num_output: 16 }
layer { name: "sig2" type: "Sigmoid" bottom: "conv2" }
layer { name: "pool2" type: "Pooling" bottom: "sig2"
        kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 pool: MAX }
layer { name: "ip1" type: "InnerProduct" bottom: "pool2" num_output: 120 }
layer { name: "relu3" type: "ReLU" bottom: "ip1" }
layer { name: "ip2" type: "InnerProduct" bottom: "relu3" num_output: 10 }
layer { name: "out" type: "Output" bottom: "ip2" }
)";

inline std::map<std::string, double> lenet_expected() {
  // Conv depths: conv1 = 2 (data, conv1); conv2 = 5.
  return {
      {"net_depth_avg", 11.0},
      {"num_conv_layers", 2.0},
      {"num_pooling_layers", 2.0},
      {"avg_IP_neurons", (120.0 + 10.0) / 2.0},
      {"avg_IP_weights", (320.0 * 120.0 + 120.0 * 10.0) / 2.0},
      {"num_conv_features", (6.0 + 16.0) / 2.0},
      {"prop_conv_into_pool", 1.0},
      {"prop_pool_into_pool", 0.0},
      {"prop_1x1_kernels", 0.0},
      {"prop_square_kernels", 0.5},
      {"prop_horiz_kernels", 0.0},
      {"prop_vert_kernels", 0.5},
      {"num_relu", 1.0},
      {"num_sigmoid", 1.0},
      // (conv1, conv2): 24x24 -> 8x10
      {"avg_grid_reduction_area_consecutive", 100.0 * (576.0 - 80.0) / 576.0},
      {"avg_grid_reduction_height_consecutive", 100.0 * (24.0 - 8.0) / 24.0},
      {"avg_grid_reduction_width_consecutive", 100.0 * (24.0 - 10.0) / 24.0},
      // (data, conv2): 28x28 -> 8x10
      {"avg_grid_reduction_area_total", 100.0 * (784.0 - 80.0) / 784.0},
      {"avg_grid_reduction_height_total", 100.0 * (28.0 - 8.0) / 28.0},
      {"avg_grid_reduction_width_total", 100.0 * (28.0 - 10.0) / 28.0},
      {"prop_nonoverlapping", 0.0},
      {"avg_stride_h", 1.0},
      {"avg_stride_w", 1.0},
      {"avg_ratio_features_to_depth", (6.0 / 2.0 + 16.0 / 5.0) / 2.0},
      {"avg_ratio_features_to_kerArea", (6.0 / 25.0 + 16.0 / 15.0) / 2.0},
      {"avg_ratio_features_to_kerHeight", (6.0 / 5.0 + 16.0 / 5.0) / 2.0},
      {"avg_ratio_features_to_kerWidth", (6.0 / 5.0 + 16.0 / 3.0) / 2.0},
      {"avg_ratio_kerArea_to_depth", (25.0 / 2.0 + 15.0 / 5.0) / 2.0},
      {"avg_ratio_kerHeight_to_depth", (5.0 / 2.0 + 5.0 / 5.0) / 2.0},
      {"avg_ratio_kerWidth_to_depth", (5.0 / 2.0 + 3.0 / 5.0) / 2.0},
  };
}

// Three 40x20x2 views, each a 3x1 conv (38x20x8) and a 2x2/2 pool (19x10x8);
// v has no activation. Concat (19x10x24) -> c2 3x3/1 pad 1 f32 (19x10)
// -> r2 -> c3 1x1/2 f16 (10x5) -> p2 3x3/2 (5x2x16 = 160) -> fc 64 -> fr,
// then two heads: target_fc 5 -> target, domain_fc 2 -> domain_sig -> domain.
// Path lengths: to target 13, 13, 12; to domain 14, 14, 13.
inline const char* kThreeViewText = R"(population: "minerva-style"
layer { name: "x" type: "Input" input_dim: 40 input_dim: 20 input_dim: 2 }
layer { name: "u" type: "Input" input_dim: 40 input_dim: 20 input_dim: 2 }
layer { name: "v" type: "Input" input_dim: 40 input_dim: 20 input_dim: 2 }
layer { name: "cx" type: "Convolution" bottom: "x" kernel_h: 3 kernel_w: 1 stride_h: 1 stride_w: 1 num_output: 8 }
layer { name: "cu" type: "Convolution" bottom: "u" kernel_h: 3 kernel_w: 1 stride_h: 1 stride_w: 1 num_output: 8 }
layer { name: "cv" type: "Convolution" bottom: "v" kernel_h: 3 kernel_w: 1 stride_h: 1 stride_w: 1 num_output: 8 }
layer { name: "rx" type: "ReLU" bottom: "cx" }
layer { name: "su" type: "Sigmoid" bottom: "cu" }
layer { name: "px" type: "Pooling" bottom: "rx" kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 }
layer { name: "pu" type: "Pooling" bottom: "su" kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 }
layer { name: "pv" type: "Pooling" bottom: "cv" kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 }
layer { name: "merge" type: "Concat" bottom: "px" bottom: "pu" bottom: "pv" }
layer { name: "c2" type: "Convolution" bottom: "merge" kernel_h: 3 kernel_w: 3 stride_h: 1 stride_w: 1 pad_h: 1 pad_w: 1 num_output: 32 }
layer { name: "r2" type: "ReLU" bottom: "c2" }
layer { name: "c3" type: "Convolution" bottom: "r2" kernel_h: 1 kernel_w: 1 stride_h: 2 stride_w: 2 num_output: 16 }
layer { name: "p2" type: "Pooling" bottom: "c3" kernel_h: 3 kernel_w: 3 stride_h: 2 stride_w: 2 }
layer { name: "fc" type: "InnerProduct" bottom: "p2" num_output: 64 }
layer { name: "fr" type: "ReLU" bottom: "fc" }
layer { name: "target_fc" type: "InnerProduct" bottom: "fr" num_output: 5 }
layer { name: "target" type: "Output" bottom: "target_fc" }
layer { name: "domain_fc" type: "InnerProduct" bottom: "fr" num_output: 2 }
layer { name: "domain_sig" type: "Sigmoid" bottom: "domain_fc" }
layer { name: "domain" type: "Output" bottom: "domain_sig" }
)";

inline std::map<std::string, double> three_view_expected() {
  // Conv depths: cx, cu, cv = 2; c2 = (6 + 6 + 5) / 3; c3 = (8 + 8 + 7) / 3.
  const double d2 = 17.0 / 3.0;
  const double d3 = 23.0 / 3.0;
  // Consecutive pairs (cx,c2) (cu,c2) (cv,c2): 38x20 -> 19x10; (c2,c3): 19x10 -> 10x5.
  return {
      {"net_depth_avg", (38.0 + 41.0) / 6.0},
      {"num_conv_layers", 5.0},
      {"num_pooling_layers", 4.0},
      {"avg_IP_neurons", (64.0 + 5.0 + 2.0) / 3.0},
      {"avg_IP_weights", (160.0 * 64.0 + 64.0 * 5.0 + 64.0 * 2.0) / 3.0},
      {"num_conv_features", (8.0 + 8.0 + 8.0 + 32.0 + 16.0) / 5.0},
      {"prop_conv_into_pool", 4.0 / 5.0},
      {"prop_pool_into_pool", 0.0},
      {"prop_1x1_kernels", 1.0 / 5.0},
      {"prop_square_kernels", 2.0 / 5.0},
      {"prop_horiz_kernels", 0.0},
      {"prop_vert_kernels", 3.0 / 5.0},
      {"num_relu", 2.0},
      {"num_sigmoid", 1.0},
      {"avg_grid_reduction_area_consecutive",
       (75.0 + 75.0 + 75.0 + 100.0 * (190.0 - 50.0) / 190.0) / 4.0},
      {"avg_grid_reduction_height_consecutive",
       (50.0 + 50.0 + 50.0 + 100.0 * (19.0 - 10.0) / 19.0) / 4.0},
      {"avg_grid_reduction_width_consecutive", (50.0 + 50.0 + 50.0 + 50.0) / 4.0},
      // (x,c3) (u,c3) (v,c3): 40x20 -> 10x5
      {"avg_grid_reduction_area_total", 93.75},
      {"avg_grid_reduction_height_total", 75.0},
      {"avg_grid_reduction_width_total", 75.0},
      {"prop_nonoverlapping", 1.0 / 5.0},
      {"avg_stride_h", 6.0 / 5.0},
      {"avg_stride_w", 6.0 / 5.0},
      {"avg_ratio_features_to_depth", (4.0 + 4.0 + 4.0 + 32.0 / d2 + 16.0 / d3) / 5.0},
      {"avg_ratio_features_to_kerArea",
       (8.0 / 3.0 + 8.0 / 3.0 + 8.0 / 3.0 + 32.0 / 9.0 + 16.0) / 5.0},
      {"avg_ratio_features_to_kerHeight",
       (8.0 / 3.0 + 8.0 / 3.0 + 8.0 / 3.0 + 32.0 / 3.0 + 16.0) / 5.0},
      {"avg_ratio_features_to_kerWidth", (8.0 + 8.0 + 8.0 + 32.0 / 3.0 + 16.0) / 5.0},
      {"avg_ratio_kerArea_to_depth", (1.5 + 1.5 + 1.5 + 9.0 / d2 + 1.0 / d3) / 5.0},
      {"avg_ratio_kerHeight_to_depth", (1.5 + 1.5 + 1.5 + 3.0 / d2 + 1.0 / d3) / 5.0},
      {"avg_ratio_kerWidth_to_depth", (0.5 + 0.5 + 0.5 + 3.0 / d2 + 1.0 / d3) / 5.0},
  };
}

}  // namespace testsupport
