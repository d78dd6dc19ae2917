#include "archattr/popgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "archattr/attributes.hpp"
#include "archattr/error.hpp"
#include "archattr/parallel.hpp"
#include "archattr/parser.hpp"
#include "archattr/rng.hpp"
#include "archattr/shape.hpp"

namespace archattr::gen {

namespace {

constexpr int kMaxAttempts = 1000;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Config, field + ": " + what);
}

void require_choices(const std::vector<int>& v, const char* field, int min_value) {
  if (v.empty()) config_error(field, "needs at least one value");
  for (int x : v) {
    if (x < min_value || x > 1000000) {
      config_error(field, "value " + std::to_string(x) + " out of range");
    }
  }
}

int pick(Rng& rng, const std::vector<int>& choices) {
  return choices[static_cast<std::size_t>(rng.below(choices.size()))];
}

enum class Slot { Conv, Pool, InnerProduct, ReLU, Sigmoid };

Slot draw_slot(Rng& rng, const KindWeights& w, bool flattened) {
  const double conv = flattened ? 0.0 : w.convolution;
  const double pool = flattened ? 0.0 : w.pooling;
  const double weights[5] = {conv, pool, w.inner_product, w.relu, w.sigmoid};
  double total = 0.0;
  for (double x : weights) total += x;
  double u = rng.uniform() * total;
  for (int i = 0; i < 5; ++i) {
    if (u < weights[i]) return static_cast<Slot>(i);
    u -= weights[i];
  }
  // rounding at the top end
  for (int i = 4; i >= 0; --i) {
    if (weights[i] > 0.0) return static_cast<Slot>(i);
  }
  return Slot::InnerProduct;
}

int pad_below(Rng& rng, const std::vector<int>& pads, int kernel) {
  std::vector<int> fitting;
  for (int p : pads) {
    if (p < kernel) fitting.push_back(p);
  }
  return fitting.empty() ? 0 : pick(rng, fitting);
}

LayerSpec draw_layer(Slot slot, Rng& rng, const GenConfig& cfg) {
  LayerSpec l;
  switch (slot) {
    case Slot::Conv: {
      l.kind = LayerKind::Convolution;
      Window w;
      w.kernel_h = pick(rng, cfg.conv_kernels);
      w.kernel_w = pick(rng, cfg.conv_kernels);
      w.stride_h = pick(rng, cfg.conv_strides);
      w.stride_w = pick(rng, cfg.conv_strides);
      w.pad_h = pad_below(rng, cfg.conv_pads, w.kernel_h);
      w.pad_w = pad_below(rng, cfg.conv_pads, w.kernel_w);
      l.window = w;
      l.num_output = pick(rng, cfg.conv_features);
      break;
    }
    case Slot::Pool: {
      l.kind = LayerKind::Pooling;
      Window w;
      w.kernel_h = w.kernel_w = pick(rng, cfg.pool_kernels);
      w.stride_h = w.stride_w = pick(rng, cfg.pool_strides);
      l.window = w;
      l.pool_method = rng.bernoulli(0.7) ? PoolMethod::Max : PoolMethod::Avg;
      break;
    }
    case Slot::InnerProduct:
      l.kind = LayerKind::InnerProduct;
      l.num_output = pick(rng, cfg.ip_neurons);
      break;
    case Slot::ReLU:
      l.kind = LayerKind::ReLU;
      break;
    case Slot::Sigmoid:
      l.kind = LayerKind::Sigmoid;
      break;
  }
  return l;
}

std::string_view name_stem(LayerKind kind) {
  switch (kind) {
    case LayerKind::Convolution: return "conv";
    case LayerKind::Pooling: return "pool";
    case LayerKind::InnerProduct: return "ip";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Concat: return "concat";
    case LayerKind::Output: return "output";
    case LayerKind::Input: return "data";
  }
  return "layer";
}

class GraphDraft {
 public:
  LayerIndex add(LayerSpec layer, const std::string& prefix, std::vector<LayerIndex> preds) {
    layer.name = prefix + std::string(name_stem(layer.kind)) + std::to_string(++counter_);
    const LayerIndex id = layers_.size();
    layers_.push_back(std::move(layer));
    for (LayerIndex p : preds) edges_.emplace_back(p, id);
    return id;
  }

  LayerIndex add_input(const std::string& name, InputShape shape) {
    LayerSpec l;
    l.kind = LayerKind::Input;
    l.name = name;
    l.input_shape = shape;
    layers_.push_back(std::move(l));
    return layers_.size() - 1;
  }

  NetworkGraph build() { return NetworkGraph::build(std::move(layers_), std::move(edges_)); }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Edge> edges_;
  int counter_ = 0;
};

LayerSpec kind_only(LayerKind kind) {
  LayerSpec l;
  l.kind = kind;
  return l;
}

NetworkGraph draw_graph(const GenConfig& cfg, Rng& rng) {
  const int length = rng.between(cfg.min_layers, cfg.max_layers);
  const bool dual = cfg.outputs == OutputTopology::Dual;
  const int head = dual ? 2 : 1;
  GraphDraft draft;
  LayerIndex tail = 0;
  bool flattened = false;

  const auto grow = [&](LayerIndex from, int count, const std::string& prefix) {
    for (int i = 0; i < count; ++i) {
      const Slot slot = draw_slot(rng, cfg.weights, flattened);
      flattened = flattened || slot == Slot::InnerProduct;
      from = draft.add(draw_layer(slot, rng, cfg), prefix, {from});
    }
    return from;
  };

  if (cfg.inputs == InputTopology::Single) {
    tail = draft.add_input("data", cfg.input_shape);
    tail = grow(tail, length - 1 - head, "");
  } else {
    // Three views share one branch plan so their grids agree at the Concat.
    const int hidden = length - 2 - head;
    const int branch = rng.between(0, hidden);
    std::vector<std::pair<Slot, LayerSpec>> plan;
    for (int i = 0; i < branch; ++i) {
      const Slot slot = draw_slot(rng, cfg.weights, flattened);
      flattened = flattened || slot == Slot::InnerProduct;
      plan.emplace_back(slot, draw_layer(slot, rng, cfg));
    }
    std::vector<LayerIndex> ends;
    for (const char* view : {"x", "u", "v"}) {
      const std::string prefix = std::string(view) + "_";
      LayerIndex at = draft.add_input(prefix + "data", cfg.input_shape);
      for (const auto& [slot, layer] : plan) at = draft.add(layer, prefix, {at});
      ends.push_back(at);
    }
    tail = draft.add(kind_only(LayerKind::Concat), "", ends);
    tail = grow(tail, hidden - branch, "");
  }

  if (dual) {
    for (const char* h : {"a_", "b_"}) {
      const LayerIndex ip = draft.add(draw_layer(Slot::InnerProduct, rng, cfg), h, {tail});
      draft.add(kind_only(LayerKind::Output), h, {ip});
    }
  } else {
    draft.add(kind_only(LayerKind::Output), "", {tail});
  }
  return draft.build();
}

}  // namespace

int GenConfig::minimum_layers() const {
  const int head = outputs == OutputTopology::Dual ? 2 : 1;
  return inputs == InputTopology::ThreeView ? 2 + head : 1 + head;
}

void GenConfig::validate() const {
  if (population < 1) config_error("population", "must be positive");
  if (min_layers > max_layers) config_error("min_layers", "exceeds max_layers");
  if (min_layers < minimum_layers()) {
    config_error("min_layers", "topology needs at least " + std::to_string(minimum_layers()));
  }
  if (max_layers > 200) config_error("max_layers", "must not exceed 200");
  if (input_shape.height < 1 || input_shape.width < 1 || input_shape.channels < 1) {
    config_error("input_height/input_width/input_channels", "must be positive");
  }
  require_choices(conv_kernels, "conv_kernels", 1);
  require_choices(conv_strides, "conv_strides", 1);
  require_choices(conv_pads, "conv_pads", 0);
  require_choices(pool_kernels, "pool_kernels", 1);
  require_choices(pool_strides, "pool_strides", 1);
  require_choices(conv_features, "conv_features", 1);
  require_choices(ip_neurons, "ip_neurons", 1);
  const double ws[5] = {weights.convolution, weights.pooling, weights.inner_product, weights.relu,
                        weights.sigmoid};
  double total = 0.0;
  for (double w : ws) {
    if (!(w >= 0.0) || !std::isfinite(w)) config_error("weights", "must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) config_error("weights", "at least one weight must be positive");
  if (weights.inner_product + weights.relu + weights.sigmoid <= 0.0) {
    config_error("weights", "inner_product, relu or sigmoid needs positive weight");
  }
}

void PlantSpec::validate() const {
  for (const auto& s : signals) {
    if (!attribute_index(s.feature)) {
      config_error("plant.signals", "unknown attribute '" + s.feature + "'");
    }
    if (!std::isfinite(s.weight)) config_error("plant.signals", "weight must be finite");
    if (s.scale && !(*s.scale >= 0.0)) config_error("plant.signals", "scale must be >= 0");
  }
  if (!std::isfinite(intercept)) config_error("plant.intercept", "must be finite");
  if (!(noise >= 0.0) || !std::isfinite(noise)) config_error("plant.noise", "must be >= 0");
  if (!(broken_p >= 0.0 && broken_p <= 1.0)) config_error("plant.broken_p", "must lie in [0, 1]");
  if (!(broken_min >= 0.0 && broken_min <= broken_max && broken_max <= 1.0)) {
    config_error("plant.broken_min/broken_max", "need 0 <= broken_min <= broken_max <= 1");
  }
}

double PlantSpec::score(const AttributeVector& v) const {
  double s = intercept;
  for (const auto& term : signals) {
    if (!term.mean || !term.scale) {
      throw Error(ErrorCode::Config, "signal '" + term.feature + "' has no standardization");
    }
    const double z = *term.scale > 0.0 ? (v[term.feature] - *term.mean) / *term.scale : 0.0;
    s += term.weight * z;
  }
  return s;
}

double PlantSpec::link_value(double s) const {
  if (link == Link::Logistic) return 1.0 / (1.0 + std::exp(-s));
  return std::clamp(0.5 + s, 0.0, 1.0);
}

NetworkGraph sample_architecture(const GenConfig& cfg, std::size_t index) {
  cfg.validate();
  const std::uint64_t base = derive_seed(cfg.seed, index);
  std::string last_failure;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(attempt)));
    try {
      NetworkGraph g = draw_graph(cfg, rng);
      infer_shapes(g);
      return g;
    } catch (const Error& e) {
      last_failure = e.what();
    }
  }
  throw Error(ErrorCode::GenerationExhausted,
              network_id(index) + ": no feasible architecture after " +
                  std::to_string(kMaxAttempts) + " draws (last: " + last_failure + ")");
}

std::string network_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "net_%06zu", index);
  return buf;
}

double planted_accuracy(const AttributeVector& v, const PlantSpec& plant, std::uint64_t seed) {
  Rng rng(seed);
  // Both draws happen unconditionally so a network's stream does not depend
  // on which mode it lands in.
  const bool broken = rng.bernoulli(plant.broken_p);
  const double broken_acc = rng.uniform(plant.broken_min, plant.broken_max);
  const double noise = rng.normal();
  if (broken) return broken_acc;
  return std::clamp(plant.link_value(plant.score(v)) + plant.noise * noise, 0.0, 1.0);
}

PlantSpec resolve_plant(const PlantSpec& plant, const std::vector<AttributeVector>& rows) {
  PlantSpec out = plant;
  const double n = static_cast<double>(rows.size());
  for (auto& term : out.signals) {
    if (term.mean && term.scale) continue;
    const std::string_view name = term.feature;
    double mean = 0.0;
    for (const auto& r : rows) mean += r[name];
    mean = n > 0 ? mean / n : 0.0;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[name] - mean) * (r[name] - mean);
    if (!term.mean) term.mean = mean;
    if (!term.scale) term.scale = n > 0 ? std::sqrt(ss / n) : 0.0;
  }
  return out;
}

double healthy_probability(const PlantSpec& plant, double score, double threshold) {
  const double center = plant.link_value(score);
  double healthy_mode;
  if (threshold >= 1.0) {
    healthy_mode = 0.0;
  } else if (threshold < 0.0) {
    healthy_mode = 1.0;
  } else if (plant.noise == 0.0) {
    healthy_mode = center > threshold ? 1.0 : 0.0;
  } else {
    const boost::math::normal_distribution<double> noise(center, plant.noise);
    healthy_mode = boost::math::cdf(boost::math::complement(noise, threshold));
  }
  double broken_mode;
  const double width = plant.broken_max - plant.broken_min;
  if (width <= 0.0) {
    broken_mode = plant.broken_min > threshold ? 1.0 : 0.0;
  } else {
    broken_mode = std::clamp((plant.broken_max - threshold) / width, 0.0, 1.0);
  }
  return (1.0 - plant.broken_p) * healthy_mode + plant.broken_p * broken_mode;
}

double balanced_bayes_rate(const PlantSpec& plant, const std::vector<double>& scores,
                           double threshold) {
  std::vector<double> p1;
  double prior1 = 0.0;
  for (double s : scores) {
    p1.push_back(healthy_probability(plant, s, threshold));
    prior1 += p1.back();
  }
  const double n = static_cast<double>(scores.size());
  prior1 /= n;
  const double prior0 = 1.0 - prior1;
  if (prior1 <= 0.0 || prior0 <= 0.0) return 1.0;
  // Balancing reweights each class by 1/prior.
  double acc = 0.0;
  for (double p : p1) acc += std::max(p / prior1, (1.0 - p) / prior0);
  return 0.5 * acc / n;
}

Population generate_population(const GenConfig& cfg, const PlantSpec& plant, unsigned threads) {
  cfg.validate();
  plant.validate();
  Population pop;
  std::vector<std::optional<NetworkGraph>> graphs(cfg.population);
  std::vector<AttributeVector> rows(cfg.population);
  parallel_for(
      cfg.population,
      [&](std::size_t i) {
        graphs[i] = sample_architecture(cfg, i);
        rows[i] = extract_attributes(*graphs[i], network_id(i));
      },
      threads);
  pop.plant = resolve_plant(plant, rows);
  const std::uint64_t accuracy_stream = derive_seed(cfg.seed, 0xacc0ULL);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].accuracy = planted_accuracy(rows[i], pop.plant, derive_seed(accuracy_stream, i));
  }
  for (auto& g : graphs) pop.networks.push_back(std::move(*g));
  pop.table.rows = std::move(rows);
  return pop;
}

void write_population(const Population& pop, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "networks", ec);
  if (ec) throw Error(ErrorCode::Io, (dir / "networks").string() + ": " + ec.message());
  for (std::size_t i = 0; i < pop.networks.size(); ++i) {
    const fs::path file = dir / "networks" / (pop.table.rows[i].network_id + ".prototxt");
    std::ofstream out(file, std::ios::binary);
    out << serialize_network(pop.networks[i]);
    if (!out) throw Error(ErrorCode::Io, file.string() + ": write failed");
  }
  AttributeTable bare = pop.table;
  for (auto& r : bare.rows) r.accuracy.reset();
  save_attribute_csv(dir / "attributes.csv", bare);
  save_attribute_csv(dir / "dataset.csv", pop.table);
}

namespace {

namespace pt = boost::property_tree;

std::vector<int> int_list(const std::string& field, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) config_error(field, "empty list entry");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      config_error(field, "'" + tok + "' is not an integer");
    }
    if (used != tok.size()) config_error(field, "'" + tok + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

template <typename T>
T scalar(const std::string& field, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) config_error(field, "cannot parse '" + text + "'");
  return v;
}

std::vector<SignalTerm> signal_list(const std::string& text) {
  std::vector<SignalTerm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) config_error("plant.signals", "expected name:weight in '" + item + "'");
    SignalTerm t;
    t.feature = item.substr(0, colon);
    t.feature.erase(0, t.feature.find_first_not_of(" \t"));
    t.feature.erase(t.feature.find_last_not_of(" \t") + 1);
    t.weight = scalar<double>("plant.signals", item.substr(colon + 1));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

GenSettings parse_gen_settings(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::Config, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  GenSettings s;
  GenConfig& c = s.config;
  PlantSpec& p = s.plant;
  for (const auto& [key, node] : tree) {
    if (!node.empty() || key == "weights" || key == "plant") {
      if (key == "weights") {
        for (const auto& [wk, wn] : node) {
          const std::string field = "weights." + wk;
          const double v = scalar<double>(field, wn.data());
          if (wk == "convolution") c.weights.convolution = v;
          else if (wk == "pooling") c.weights.pooling = v;
          else if (wk == "inner_product") c.weights.inner_product = v;
          else if (wk == "relu") c.weights.relu = v;
          else if (wk == "sigmoid") c.weights.sigmoid = v;
          else config_error(field, "unknown key");
        }
      } else if (key == "plant") {
        for (const auto& [pk, pn] : node) {
          const std::string field = "plant." + pk;
          const std::string& v = pn.data();
          if (pk == "signals") p.signals = signal_list(v);
          else if (pk == "link") {
            if (v == "logistic") p.link = Link::Logistic;
            else if (v == "linear_clipped") p.link = Link::LinearClipped;
            else config_error(field, "expected logistic or linear_clipped");
          } else if (pk == "intercept") p.intercept = scalar<double>(field, v);
          else if (pk == "noise") p.noise = scalar<double>(field, v);
          else if (pk == "broken_p") p.broken_p = scalar<double>(field, v);
          else if (pk == "broken_min") p.broken_min = scalar<double>(field, v);
          else if (pk == "broken_max") p.broken_max = scalar<double>(field, v);
          else config_error(field, "unknown key");
        }
      } else {
        config_error("[" + key + "]", "unknown section");
      }
      continue;
    }
    const std::string& v = node.data();
    if (key == "population") {
      const auto n = scalar<long long>(key, v);
      if (n < 1) config_error(key, "must be positive");
      c.population = static_cast<std::size_t>(n);
    } else if (key == "seed") c.seed = scalar<std::uint64_t>(key, v);
    else if (key == "min_layers") c.min_layers = scalar<int>(key, v);
    else if (key == "max_layers") c.max_layers = scalar<int>(key, v);
    else if (key == "input_topology") {
      if (v == "single") c.inputs = InputTopology::Single;
      else if (v == "three_view") c.inputs = InputTopology::ThreeView;
      else config_error(key, "expected single or three_view");
    } else if (key == "output_topology") {
      if (v == "single") c.outputs = OutputTopology::Single;
      else if (v == "dual") c.outputs = OutputTopology::Dual;
      else config_error(key, "expected single or dual");
    } else if (key == "input_height") c.input_shape.height = scalar<int>(key, v);
    else if (key == "input_width") c.input_shape.width = scalar<int>(key, v);
    else if (key == "input_channels") c.input_shape.channels = scalar<int>(key, v);
    else if (key == "conv_kernels") c.conv_kernels = int_list(key, v);
    else if (key == "conv_strides") c.conv_strides = int_list(key, v);
    else if (key == "conv_pads") c.conv_pads = int_list(key, v);
    else if (key == "pool_kernels") c.pool_kernels = int_list(key, v);
    else if (key == "pool_strides") c.pool_strides = int_list(key, v);
    else if (key == "conv_features") c.conv_features = int_list(key, v);
    else if (key == "ip_neurons") c.ip_neurons = int_list(key, v);
    else config_error(key, "unknown key");
  }
  c.validate();
  p.validate();
  return s;
}

GenSettings load_gen_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open");
  try {
    return parse_gen_settings(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace archattr::gen
