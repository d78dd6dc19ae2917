#include <random>
#include <set>
#include <string>

#include "archattr/error.hpp"
#include "archattr/network.hpp"
#include "archattr/parser.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/random_dag.hpp"

using namespace archattr;

namespace {

const char* kMinimalChain = R"(
# Input -> Conv -> Output, edges implied by file order
layer { name: "data" type: "Input" input_dim: 28 input_dim: 28 input_dim: 1 }
layer {
  name: "conv1"
  type: "Convolution"
  kernel_h: 5 kernel_w: 5 stride_h: 1 stride_w: 1
  num_output: 6
}
layer { name: "out" type: "Output" }
)";

const char* kThreeView = R"(
population: "first"
layer { name: "x" type: "Input" input_dim: 32 input_dim: 16 input_dim: 2 }
layer { name: "u" type: "Input" input_dim: 32 input_dim: 16 input_dim: 2 }
layer { name: "v" type: "Input" input_dim: 32 input_dim: 16 input_dim: 2 }
layer { name: "cx" type: "Convolution" bottom: "x" kernel_h: 3 kernel_w: 3 stride_h: 1 stride_w: 1 num_output: 4 }
layer { name: "cu" type: "Convolution" bottom: "u" kernel_h: 3 kernel_w: 3 stride_h: 1 stride_w: 1 num_output: 4 }
layer { name: "cv" type: "Convolution" bottom: "v" kernel_h: 3 kernel_w: 3 stride_h: 1 stride_w: 1 num_output: 4 }
layer { name: "merge" type: "Concat" bottom: "cx" bottom: "cu" bottom: "cv" }
layer { name: "fc" type: "InnerProduct" bottom: "merge" num_output: 10 }
layer { name: "target" type: "Output" bottom: "fc" }
layer { name: "domain" type: "Output" bottom: "fc" }
)";

ErrorCode code_of(const std::string& text) {
  try {
    parse_network(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("minimal chain parses into three layers and two edges") {
  const auto g = parse_network(kMinimalChain);
  CHECK(g.size() == 3);
  CHECK(g.edges().size() == 2);
  CHECK(g.layer(1).kind == LayerKind::Convolution);
  CHECK(g.layer(1).window->kernel_h == 5);
  CHECK(g.layer(1).window->pad_h == 0);
  CHECK(g.layer(1).num_output == 6);
  CHECK(g.layer(0).input_shape == InputShape{28, 28, 1});
}

TEST_CASE("three-input concat-merged two-output description") {
  const auto g = parse_network(kThreeView);
  CHECK(g.inputs().size() == 3);
  CHECK(g.outputs().size() == 2);
  for (auto i : g.inputs()) CHECK(g.predecessors(i).empty());
  for (auto o : g.outputs()) CHECK(g.successors(o).empty());
  CHECK(g.population_tag() == std::optional<std::string>("first"));
}

TEST_CASE("cycle is rejected") {
  const char* text = R"(
layer { name: "in" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "A" type: "ReLU" bottom: "B" }
layer { name: "B" type: "Sigmoid" bottom: "A" }
layer { name: "merge" type: "Concat" bottom: "in" bottom: "B" }
layer { name: "out" type: "Output" bottom: "merge" }
)";
  CHECK(code_of(text) == ErrorCode::Cycle);
}

TEST_CASE("typed parse errors") {
  SUBCASE("syntax error reports line and column") {
    try {
      parse_network("layer {\n  name \"x\"\n}");
      FAIL("no error");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 8);
    }
  }
  SUBCASE("unknown kind") {
    CHECK(code_of(R"(layer { name: "a" type: "LSTM" })") == ErrorCode::UnknownLayerKind);
  }
  SUBCASE("missing kernel") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "c" type: "Convolution" stride_h: 1 stride_w: 1 num_output: 2 }
layer { name: "o" type: "Output" })") == ErrorCode::MissingField);
  }
  SUBCASE("missing input_dim") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 }
layer { name: "o" type: "Output" })") == ErrorCode::MissingField);
  }
  SUBCASE("field on the wrong kind") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "r" type: "ReLU" num_output: 3 }
layer { name: "o" type: "Output" })") == ErrorCode::UnexpectedField);
  }
  SUBCASE("duplicate name") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "d" type: "Output" })") == ErrorCode::DuplicateLayerName);
  }
  SUBCASE("dangling bottom") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "o" type: "Output" bottom: "nope" })") == ErrorCode::DanglingReference);
  }
  SUBCASE("zero stride") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "p" type: "Pooling" kernel_h: 2 kernel_w: 2 stride_h: 0 stride_w: 1 }
layer { name: "o" type: "Output" })") == ErrorCode::InvalidGraph);
  }
  SUBCASE("dangling layer without consumers") {
    CHECK(code_of(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "r" type: "ReLU" bottom: "d" }
layer { name: "o" type: "Output" bottom: "d" })") == ErrorCode::InvalidGraph);
  }
  SUBCASE("only Concat may merge") {
    CHECK(code_of(R"(
layer { name: "a" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "b" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "o" type: "Output" bottom: "a" bottom: "b" })") == ErrorCode::InvalidGraph);
  }
}

TEST_CASE("bottoms may reference a top blob name") {
  const auto g = parse_network(R"(
layer { name: "d" type: "Input" top: "data" input_dim: 8 input_dim: 8 input_dim: 1 }
layer { name: "p" type: "Pooling" bottom: "data" kernel_h: 2 kernel_w: 2 stride_h: 2 stride_w: 2 pool: MAX }
layer { name: "o" type: "Output" bottom: "p" })");
  CHECK(g.predecessors(1) == std::vector<LayerIndex>{0});
  CHECK(g.layer(1).pool_method == PoolMethod::Max);
}

TEST_CASE("topological order") {
  SUBCASE("linear chain of four") {
    const auto g = parse_network(R"(
layer { name: "a" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "b" type: "ReLU" }
layer { name: "c" type: "Sigmoid" }
layer { name: "d" type: "Output" })");
    CHECK(topological_order(g) == std::vector<LayerIndex>{0, 1, 2, 3});
  }
  SUBCASE("diamond breaks ties by file order") {
    const auto g = parse_network(R"(
layer { name: "m" type: "Concat" bottom: "A" bottom: "B" }
layer { name: "B" type: "Sigmoid" bottom: "in" }
layer { name: "A" type: "ReLU" bottom: "in" }
layer { name: "in" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "o" type: "Output" bottom: "m" })");
    // B (index 1) precedes A (index 2) in the file.
    CHECK(topological_order(g) == std::vector<LayerIndex>{3, 1, 2, 0, 4});
  }
  SUBCASE("random DAGs respect every edge") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      const auto g = testsupport::random_dag(seed);
      const auto order = topological_order(g);
      REQUIRE(order.size() == g.size());
      std::vector<std::size_t> pos(g.size());
      for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
      for (const auto& [u, v] : g.edges()) CHECK(pos[u] < pos[v]);
    }
  }
}

TEST_CASE("enumerate_io_paths") {
  SUBCASE("chain gives one full-length path") {
    const auto g = parse_network(kMinimalChain);
    const auto paths = enumerate_io_paths(g, 100);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0] == LayerPath{0, 1, 2});
  }
  SUBCASE("two inputs into one concat") {
    const auto g = parse_network(R"(
layer { name: "a" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "b" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "m" type: "Concat" bottom: "a" bottom: "b" }
layer { name: "o" type: "Output" bottom: "m" })");
    CHECK(enumerate_io_paths(g, 10).size() == 2);
  }
  SUBCASE("cap is enforced") {
    const auto g = parse_network(kThreeView);
    CHECK(enumerate_io_paths(g, 6).size() == 6);
    CHECK_THROWS_AS(enumerate_io_paths(g, 5), Error);
  }
  SUBCASE("matches brute-force DFS on random DAGs") {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const auto g = testsupport::random_dag(seed);
      const auto paths = enumerate_io_paths(g, 1u << 20);
      const std::set<LayerPath> got(paths.begin(), paths.end());
      CHECK(got.size() == paths.size());
      CHECK(got == testsupport::oracle_io_paths(g));
    }
  }
}

TEST_CASE("serialize then parse reproduces the graph") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto g = testsupport::random_dag(seed);
    const auto text = serialize_network(g);
    const auto back = parse_network(text);
    CHECK(back == g);
    CHECK(serialize_network(back) == text);
  }
  const auto g = parse_network(kThreeView);
  CHECK(parse_network(serialize_network(g)) == g);
}

TEST_CASE("fuzzed input yields typed errors only") {
  const std::string base = kThreeView;
  std::mt19937_64 rng(7);
  const std::string alphabet = "{}:\"#\n abcxyz019-_";
  std::size_t parsed = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text = base;
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = rng() % text.size();
      switch (rng() % 3) {
        case 0: text[pos] = alphabet[rng() % alphabet.size()]; break;
        case 1: text.erase(pos, 1 + rng() % 8); break;
        default: text.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
      }
    }
    try {
      parse_network(text);
      ++parsed;
    } catch (const Error&) {
    }
  }
  CHECK(parsed < 3000);
}
