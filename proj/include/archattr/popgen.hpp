#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "archattr/attribute_table.hpp"
#include "archattr/network.hpp"

namespace archattr::gen {

enum class InputTopology { Single, ThreeView };
enum class OutputTopology { Single, Dual };

// Relative weights of the hidden layer kinds. Layers after an InnerProduct
// are drawn from InnerProduct and the activations only.
struct KindWeights {
  double convolution = 5.0;
  double pooling = 2.0;
  double inner_product = 0.3;
  double relu = 2.0;
  double sigmoid = 1.0;
};

struct GenConfig {
  std::size_t population = 1000;
  std::uint64_t seed = 1;
  // Layers on every Input -> Output path, both ends included.
  int min_layers = 6;
  int max_layers = 16;
  InputTopology inputs = InputTopology::ThreeView;
  OutputTopology outputs = OutputTopology::Dual;
  InputShape input_shape{127, 94, 2};
  std::vector<int> conv_kernels{1, 2, 3, 4, 5, 7};
  std::vector<int> conv_strides{1, 1, 1, 2, 3};
  std::vector<int> conv_pads{0, 0, 1, 2};
  std::vector<int> pool_kernels{2, 2, 3};
  std::vector<int> pool_strides{1, 2, 2};
  std::vector<int> conv_features{4, 8, 12, 16, 24, 32, 48, 64, 96, 128};
  std::vector<int> ip_neurons{16, 32, 64, 100, 128, 196, 256, 512, 1024};
  KindWeights weights;

  // Throws Error(Config) naming the offending field.
  void validate() const;
  // Shortest path length the topology allows.
  int minimum_layers() const;
};

enum class Link { Logistic, LinearClipped };

struct SignalTerm {
  std::string feature;  // canonical attribute name
  double weight = 0.0;
  // Standardization of the attribute; filled from the population when empty.
  std::optional<double> mean;
  std::optional<double> scale;
};

struct PlantSpec {
  std::vector<SignalTerm> signals{
      {"net_depth_avg", 0.4, {}, {}},
      {"avg_IP_neurons", 0.4, {}, {}},
      {"prop_square_kernels", 0.4, {}, {}},
  };
  Link link = Link::Logistic;
  double intercept = 1.4;  // healthy networks centre near 0.8
  double noise = 0.05;     // std of additive accuracy noise
  double broken_p = 0.4;
  double broken_min = 0.0;
  double broken_max = 0.05;

  void validate() const;
  // Linear score Σ w z (plus intercept); needs every mean and scale set.
  double score(const AttributeVector& v) const;
  double link_value(double score) const;
};

// Draws one architecture; the same (cfg.seed, index) always gives the same
// graph. Throws GenerationExhausted after 1000 rejected draws.
NetworkGraph sample_architecture(const GenConfig& cfg, std::size_t index);

std::string network_id(std::size_t index);

double planted_accuracy(const AttributeVector& v, const PlantSpec& plant, std::uint64_t seed);

// Fills unset signal means and scales (population std) from `rows`.
PlantSpec resolve_plant(const PlantSpec& plant, const std::vector<AttributeVector>& rows);

// Probability that a network with linear score `score` ends up with
// accuracy > threshold.
double healthy_probability(const PlantSpec& plant, double score, double threshold);

// Best achievable accuracy on class-balanced data thresholded at `threshold`,
// for networks whose linear scores are `scores`.
double balanced_bayes_rate(const PlantSpec& plant, const std::vector<double>& scores,
                           double threshold);

struct Population {
  std::vector<NetworkGraph> networks;
  AttributeTable table;  // accuracies attached
  PlantSpec plant;       // resolved
};

// Generation is parallel over indices; the result does not depend on the
// thread count.
Population generate_population(const GenConfig& cfg, const PlantSpec& plant,
                               unsigned threads = 0);

// Writes networks/<id>.prototxt, attributes.csv (no accuracy column) and
// dataset.csv (with accuracy) under `dir`.
void write_population(const Population& pop, const std::filesystem::path& dir);

struct GenSettings {
  GenConfig config;
  PlantSpec plant;
};

// INI-style key = value file; see docs/config_format.md.
GenSettings parse_gen_settings(std::istream& in);
GenSettings load_gen_settings(const std::filesystem::path& path);

}  // namespace archattr::gen
