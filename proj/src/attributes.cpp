#include "archattr/attributes.hpp"

#include <algorithm>
#include <set>

#include "archattr/error.hpp"

namespace archattr {
namespace {

double mean_or_zero(double sum, std::size_t count) {
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double percent_reduction(double before, double after) {
  return 100.0 * (before - after) / before;
}

bool is_conv(const NetworkGraph& g, LayerIndex i) {
  return g.layer(i).kind == LayerKind::Convolution;
}

// Path count and summed path length (in layers) from any Input to each layer.
struct PathStats {
  std::vector<double> count;
  std::vector<double> length_sum;
};

PathStats paths_from_inputs(const NetworkGraph& g) {
  PathStats s{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  for (LayerIndex v : topological_order(g)) {
    if (g.layer(v).kind == LayerKind::Input) {
      s.count[v] = 1.0;
      s.length_sum[v] = 1.0;
      continue;
    }
    for (LayerIndex u : g.predecessors(v)) {
      s.count[v] += s.count[u];
      s.length_sum[v] += s.length_sum[u] + s.count[u];
    }
  }
  return s;
}

// Successors of `i`, looking through interposed activation layers.
std::vector<LayerIndex> effective_successors(const NetworkGraph& g, LayerIndex i) {
  std::vector<LayerIndex> out;
  std::vector<LayerIndex> stack(g.successors(i).begin(), g.successors(i).end());
  std::set<LayerIndex> seen;
  while (!stack.empty()) {
    const LayerIndex v = stack.back();
    stack.pop_back();
    if (!seen.insert(v).second) continue;
    if (is_activation(g.layer(v).kind)) {
      stack.insert(stack.end(), g.successors(v).begin(), g.successors(v).end());
    } else {
      out.push_back(v);
    }
  }
  return out;
}

}  // namespace

std::optional<std::size_t> attribute_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (kAttributeNames[i] == name) return i;
  }
  return std::nullopt;
}

double AttributeVector::operator[](std::string_view name) const {
  const auto idx = attribute_index(name);
  if (!idx) throw Error(ErrorCode::Config, "unknown attribute '" + std::string(name) + "'");
  return values[*idx];
}

double average_depth(const NetworkGraph& g) {
  const PathStats s = paths_from_inputs(g);
  double count = 0.0;
  double length = 0.0;
  for (LayerIndex o : g.outputs()) {
    count += s.count[o];
    length += s.length_sum[o];
  }
  return count == 0.0 ? 0.0 : length / count;
}

std::vector<double> layer_depths(const NetworkGraph& g) {
  const PathStats s = paths_from_inputs(g);
  std::vector<double> depth(g.size(), 0.0);
  for (LayerIndex i = 0; i < g.size(); ++i) {
    if (s.count[i] > 0.0) depth[i] = s.length_sum[i] / s.count[i];
  }
  return depth;
}

LayerCounts layer_counts(const NetworkGraph& g, const ShapeTable& shapes) {
  LayerCounts c;
  double conv_features = 0.0;
  double ip_neurons = 0.0;
  double ip_weights = 0.0;
  for (LayerIndex i = 0; i < g.size(); ++i) {
    const LayerSpec& layer = g.layer(i);
    switch (layer.kind) {
      case LayerKind::Convolution:
        ++c.num_conv_layers;
        conv_features += *layer.num_output;
        break;
      case LayerKind::Pooling:
        ++c.num_pooling_layers;
        break;
      case LayerKind::InnerProduct: {
        ++c.num_inner_product;
        ip_neurons += *layer.num_output;
        const LayerIndex pred = g.predecessors(i).front();
        ip_weights += static_cast<double>(shapes.at(pred).size()) * *layer.num_output;
        break;
      }
      case LayerKind::ReLU:
      case LayerKind::Sigmoid: {
        const LayerIndex pred = g.predecessors(i).front();
        if (is_conv(g, pred)) {
          ++(layer.kind == LayerKind::ReLU ? c.num_relu : c.num_sigmoid);
        }
        break;
      }
      default:
        break;
    }
  }
  c.num_conv_features = mean_or_zero(conv_features, c.num_conv_layers);
  c.avg_IP_neurons = mean_or_zero(ip_neurons, c.num_inner_product);
  c.avg_IP_weights = mean_or_zero(ip_weights, c.num_inner_product);
  return c;
}

SuccessionProps succession_props(const NetworkGraph& g) {
  std::size_t convs = 0, conv_hits = 0, pools = 0, pool_hits = 0;
  for (LayerIndex i = 0; i < g.size(); ++i) {
    const LayerKind kind = g.layer(i).kind;
    if (kind != LayerKind::Convolution && kind != LayerKind::Pooling) continue;
    const auto next = effective_successors(g, i);
    const bool into_pool = std::any_of(next.begin(), next.end(), [&](LayerIndex v) {
      return g.layer(v).kind == LayerKind::Pooling;
    });
    if (kind == LayerKind::Convolution) {
      ++convs;
      conv_hits += into_pool;
    } else {
      ++pools;
      pool_hits += into_pool;
    }
  }
  return {mean_or_zero(static_cast<double>(conv_hits), convs),
          mean_or_zero(static_cast<double>(pool_hits), pools)};
}

KernelShapeProps kernel_shape_props(const NetworkGraph& g) {
  std::size_t n = 0, one = 0, square = 0, horiz = 0, vert = 0, nonoverlap = 0;
  double stride_h = 0.0, stride_w = 0.0;
  for (LayerIndex i : g.layers_of(LayerKind::Convolution)) {
    const Window& w = *g.layer(i).window;
    ++n;
    one += w.kernel_h == 1 && w.kernel_w == 1;
    square += w.kernel_h == w.kernel_w;
    horiz += w.kernel_w > w.kernel_h;
    vert += w.kernel_h > w.kernel_w;
    nonoverlap += w.stride_h >= w.kernel_h && w.stride_w >= w.kernel_w;
    stride_h += w.stride_h;
    stride_w += w.stride_w;
  }
  const auto prop = [n](std::size_t k) { return mean_or_zero(static_cast<double>(k), n); };
  return {prop(one),        prop(square),           prop(horiz),           prop(vert),
          prop(nonoverlap), mean_or_zero(stride_h, n), mean_or_zero(stride_w, n)};
}

std::vector<LayerPair> consecutive_conv_pairs(const NetworkGraph& g) {
  std::set<LayerPair> pairs;
  for (LayerIndex b : g.layers_of(LayerKind::Convolution)) {
    std::vector<LayerIndex> stack(g.predecessors(b).begin(), g.predecessors(b).end());
    std::set<LayerIndex> seen;
    while (!stack.empty()) {
      const LayerIndex v = stack.back();
      stack.pop_back();
      if (!seen.insert(v).second) continue;
      if (is_conv(g, v)) {
        pairs.emplace(v, b);
      } else {
        stack.insert(stack.end(), g.predecessors(v).begin(), g.predecessors(v).end());
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<LayerPair> input_to_final_conv_pairs(const NetworkGraph& g) {
  // conv_free[v]: some path from v to an Output contains no Convolution.
  std::vector<bool> conv_free(g.size(), false);
  const auto order = topological_order(g);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const LayerIndex v = *it;
    if (is_conv(g, v)) continue;
    if (g.layer(v).kind == LayerKind::Output) {
      conv_free[v] = true;
      continue;
    }
    for (LayerIndex s : g.successors(v)) conv_free[v] = conv_free[v] || conv_free[s];
  }

  std::vector<LayerPair> pairs;
  for (LayerIndex in : g.inputs()) {
    std::vector<bool> reached(g.size(), false);
    std::vector<LayerIndex> stack{in};
    while (!stack.empty()) {
      const LayerIndex v = stack.back();
      stack.pop_back();
      if (reached[v]) continue;
      reached[v] = true;
      for (LayerIndex s : g.successors(v)) stack.push_back(s);
    }
    for (LayerIndex f = 0; f < g.size(); ++f) {
      if (!reached[f] || !is_conv(g, f)) continue;
      const auto& next = g.successors(f);
      if (std::any_of(next.begin(), next.end(), [&](LayerIndex s) { return conv_free[s]; })) {
        pairs.emplace_back(in, f);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

GridReductions grid_reductions(const NetworkGraph& g, const ShapeTable& shapes) {
  GridReductions r;
  const auto accumulate = [&](const std::vector<LayerPair>& pairs, double& area,
                              double& height, double& width) {
    std::size_t n = 0;
    for (const auto& [from, to] : pairs) {
      if (shapes.flattened.at(from) || shapes.flattened.at(to)) continue;
      const GridShape& a = shapes.at(from);
      const GridShape& b = shapes.at(to);
      area += percent_reduction(static_cast<double>(a.area()), static_cast<double>(b.area()));
      height += percent_reduction(a.height, b.height);
      width += percent_reduction(a.width, b.width);
      ++n;
    }
    area = mean_or_zero(area, n);
    height = mean_or_zero(height, n);
    width = mean_or_zero(width, n);
    return n > 0;
  };
  r.consecutive_defined = accumulate(consecutive_conv_pairs(g), r.area_consecutive,
                                     r.height_consecutive, r.width_consecutive);
  r.total_defined = accumulate(input_to_final_conv_pairs(g), r.area_total, r.height_total,
                               r.width_total);
  return r;
}

RatioAttributes ratio_attributes(const NetworkGraph& g, const ShapeTable& /*shapes*/) {
  const auto depth = layer_depths(g);
  RatioAttributes r;
  const auto convs = g.layers_of(LayerKind::Convolution);
  for (LayerIndex i : convs) {
    const LayerSpec& layer = g.layer(i);
    const double d = depth[i];
    const double f = *layer.num_output;
    const double kh = layer.window->kernel_h;
    const double kw = layer.window->kernel_w;
    const double ka = kh * kw;
    r.features_to_depth += f / d;
    r.features_to_kerArea += f / ka;
    r.features_to_kerHeight += f / kh;
    r.features_to_kerWidth += f / kw;
    r.kerArea_to_depth += ka / d;
    r.kerHeight_to_depth += kh / d;
    r.kerWidth_to_depth += kw / d;
  }
  const std::size_t n = convs.size();
  for (double* v : {&r.features_to_depth, &r.features_to_kerArea, &r.features_to_kerHeight,
                    &r.features_to_kerWidth, &r.kerArea_to_depth, &r.kerHeight_to_depth,
                    &r.kerWidth_to_depth}) {
    *v = mean_or_zero(*v, n);
  }
  return r;
}

AttributeVector extract_attributes(const NetworkGraph& g, std::string network_id) {
  ShapeTable shapes;
  try {
    shapes = infer_shapes(g);
  } catch (const Error& e) {
    throw Error(e.code(), network_id.empty() ? std::string(e.what())
                                             : network_id + ": " + e.what());
  }

  AttributeVector v;
  v.network_id = std::move(network_id);
  const auto set = [&v](std::string_view name, double value, bool defined = true) {
    const std::size_t i = *attribute_index(name);
    v.values[i] = defined ? value : 0.0;
    v.undefined[i] = !defined;
  };

  const LayerCounts counts = layer_counts(g, shapes);
  const bool has_conv = counts.num_conv_layers > 0;
  const bool has_ip = counts.num_inner_product > 0;

  set("net_depth_avg", average_depth(g));
  set("num_conv_layers", counts.num_conv_layers);
  set("num_pooling_layers", counts.num_pooling_layers);
  set("avg_IP_neurons", counts.avg_IP_neurons, has_ip);
  set("avg_IP_weights", counts.avg_IP_weights, has_ip);
  set("num_conv_features", counts.num_conv_features, has_conv);
  set("num_relu", counts.num_relu);
  set("num_sigmoid", counts.num_sigmoid);

  const SuccessionProps succ = succession_props(g);
  set("prop_conv_into_pool", succ.prop_conv_into_pool, has_conv);
  set("prop_pool_into_pool", succ.prop_pool_into_pool, counts.num_pooling_layers > 0);

  const KernelShapeProps k = kernel_shape_props(g);
  set("prop_1x1_kernels", k.prop_1x1_kernels, has_conv);
  set("prop_square_kernels", k.prop_square_kernels, has_conv);
  set("prop_horiz_kernels", k.prop_horiz_kernels, has_conv);
  set("prop_vert_kernels", k.prop_vert_kernels, has_conv);
  set("prop_nonoverlapping", k.prop_nonoverlapping, has_conv);
  set("avg_stride_h", k.avg_stride_h, has_conv);
  set("avg_stride_w", k.avg_stride_w, has_conv);

  const GridReductions gr = grid_reductions(g, shapes);
  set("avg_grid_reduction_area_consecutive", gr.area_consecutive, gr.consecutive_defined);
  set("avg_grid_reduction_height_consecutive", gr.height_consecutive, gr.consecutive_defined);
  set("avg_grid_reduction_width_consecutive", gr.width_consecutive, gr.consecutive_defined);
  set("avg_grid_reduction_area_total", gr.area_total, gr.total_defined);
  set("avg_grid_reduction_height_total", gr.height_total, gr.total_defined);
  set("avg_grid_reduction_width_total", gr.width_total, gr.total_defined);

  const RatioAttributes ra = ratio_attributes(g, shapes);
  set("avg_ratio_features_to_depth", ra.features_to_depth, has_conv);
  set("avg_ratio_features_to_kerArea", ra.features_to_kerArea, has_conv);
  set("avg_ratio_features_to_kerHeight", ra.features_to_kerHeight, has_conv);
  set("avg_ratio_features_to_kerWidth", ra.features_to_kerWidth, has_conv);
  set("avg_ratio_kerArea_to_depth", ra.kerArea_to_depth, has_conv);
  set("avg_ratio_kerHeight_to_depth", ra.kerHeight_to_depth, has_conv);
  set("avg_ratio_kerWidth_to_depth", ra.kerWidth_to_depth, has_conv);
  return v;
}

}  // namespace archattr
