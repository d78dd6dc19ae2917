#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "archattr/network.hpp"

namespace archattr {

// Parses the prototxt-style layer description format:
//
//   population: "first"          # optional network-level tag
//   layer {
//     name: "conv1"
//     type: "Convolution"
//     bottom: "data"             # repeatable; refers to a layer name or top
//     kernel_h: 5  kernel_w: 5  stride_h: 1  stride_w: 1
//     num_output: 6
//   }
//
// When no layer declares a bottom, the layers form a chain in file order.
NetworkGraph parse_network(std::string_view text);

NetworkGraph load_network(const std::filesystem::path& path);

// Emits text that parse_network() maps back to an equal graph.
std::string serialize_network(const NetworkGraph& g);

}  // namespace archattr
