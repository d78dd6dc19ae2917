#pragma once

#include <vector>

#include "archattr/network.hpp"

namespace archattr {

// Activation grid of one layer: height runs along the strip axis, width
// along the plane axis.
struct GridShape {
  int height = 1;
  int width = 1;
  int features = 1;

  long long area() const noexcept {
    return static_cast<long long>(height) * width;
  }
  long long size() const noexcept { return area() * features; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct ShapeTable {
  std::vector<GridShape> shapes;  // indexed by layer
  std::vector<bool> flattened;    // true from the first InnerProduct onward

  const GridShape& at(LayerIndex i) const { return shapes.at(i); }

  friend bool operator==(const ShapeTable&, const ShapeTable&) = default;
};

// floor((in + 2 pad - kernel) / stride) + 1; throws KernelTooLarge when the
// kernel does not fit the padded input.
int conv_output_dim(int in, int kernel, int stride, int pad);

// Ceiling variant used by pooling. A trailing window that would start past
// the last input element (in + pad - 1) is dropped.
int pool_output_dim(int in, int kernel, int stride, int pad);

ShapeTable infer_shapes(const NetworkGraph& g);

}  // namespace archattr
