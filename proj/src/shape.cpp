#include "archattr/shape.hpp"

#include <string>

#include "archattr/error.hpp"

namespace archattr {
namespace {

void check_window_args(int in, int kernel, int stride, int pad) {
  if (in < 1 || kernel < 1 || stride < 1 || pad < 0) {
    throw Error(ErrorCode::InvalidGraph, "invalid window arguments");
  }
  if (static_cast<long long>(in) + 2LL * pad < kernel) {
    throw Error(ErrorCode::KernelTooLarge,
                "kernel " + std::to_string(kernel) + " exceeds padded input " +
                    std::to_string(in + 2 * pad));
  }
}

}  // namespace

int conv_output_dim(int in, int kernel, int stride, int pad) {
  check_window_args(in, kernel, stride, pad);
  return static_cast<int>((in + 2LL * pad - kernel) / stride + 1);
}

int pool_output_dim(int in, int kernel, int stride, int pad) {
  check_window_args(in, kernel, stride, pad);
  const long long span = in + 2LL * pad - kernel;
  long long out = (span + stride - 1) / stride + 1;
  while (out > 1 && (out - 1) * stride >= static_cast<long long>(in) + pad) --out;
  return static_cast<int>(out);
}

ShapeTable infer_shapes(const NetworkGraph& g) {
  ShapeTable table;
  table.shapes.assign(g.size(), GridShape{});
  table.flattened.assign(g.size(), false);

  for (LayerIndex i : topological_order(g)) {
    const LayerSpec& layer = g.layer(i);
    const auto& preds = g.predecessors(i);
    const std::string where = "layer '" + layer.name + "': ";

    bool flat = false;
    for (LayerIndex p : preds) flat = flat || table.flattened[p];

    GridShape out;
    switch (layer.kind) {
      case LayerKind::Input:
        out = {layer.input_shape->height, layer.input_shape->width,
               layer.input_shape->channels};
        break;
      case LayerKind::Convolution:
      case LayerKind::Pooling: {
        if (flat) {
          throw Error(ErrorCode::ConvAfterFlatten,
                      where + "spatial layer downstream of an InnerProduct");
        }
        const GridShape& in = table.shapes[preds.front()];
        const Window& w = *layer.window;
        const auto dim = layer.kind == LayerKind::Convolution ? conv_output_dim
                                                               : pool_output_dim;
        try {
          out.height = dim(in.height, w.kernel_h, w.stride_h, w.pad_h);
          out.width = dim(in.width, w.kernel_w, w.stride_w, w.pad_w);
        } catch (const Error& e) {
          throw Error(e.code(), where + e.what());
        }
        out.features = layer.kind == LayerKind::Convolution ? *layer.num_output
                                                            : in.features;
        break;
      }
      case LayerKind::InnerProduct:
        out = {1, 1, *layer.num_output};
        flat = true;
        break;
      case LayerKind::Concat: {
        const GridShape& first = table.shapes[preds.front()];
        out = {first.height, first.width, 0};
        for (LayerIndex p : preds) {
          const GridShape& s = table.shapes[p];
          if (s.height != first.height || s.width != first.width) {
            throw Error(ErrorCode::ShapeMismatch,
                        where + "Concat inputs disagree on height/width");
          }
          out.features += s.features;
        }
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Sigmoid:
      case LayerKind::Output:
        out = table.shapes[preds.front()];
        break;
    }
    table.shapes[i] = out;
    table.flattened[i] = flat;
  }
  return table;
}

}  // namespace archattr
