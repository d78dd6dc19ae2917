#include <random>

#include "archattr/error.hpp"
#include "archattr/parser.hpp"
#include "archattr/shape.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/random_dag.hpp"

using namespace archattr;

TEST_CASE("conv_output_dim") {
  CHECK(conv_output_dim(28, 5, 1, 0) == 24);
  CHECK(conv_output_dim(7, 7, 1, 0) == 1);
  // Window-count oracle for the strided, padded case.
  const int expected = testsupport::oracle_conv_dim(127, 3, 2, 1);
  CHECK(expected == 64);
  CHECK(conv_output_dim(127, 3, 2, 1) == expected);
  CHECK_THROWS_AS(conv_output_dim(4, 5, 1, 0), Error);
  try {
    conv_output_dim(4, 7, 1, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KernelTooLarge);
  }
}

TEST_CASE("pool_output_dim uses the ceiling convention") {
  CHECK(testsupport::oracle_pool_dim(7, 2, 2, 0) == 4);
  CHECK(pool_output_dim(7, 2, 2, 0) == 4);
  CHECK(pool_output_dim(8, 2, 2, 0) == 4);
  CHECK(pool_output_dim(5, 3, 1, 0) == 3);
  // Trailing window starting in the right padding is clipped.
  CHECK(pool_output_dim(5, 1, 3, 0) == testsupport::oracle_pool_dim(5, 1, 3, 0));
  CHECK_THROWS_AS(pool_output_dim(2, 3, 1, 0), Error);
}

TEST_CASE("window dims match the enumeration oracles exhaustively") {
  for (int in = 1; in <= 30; ++in) {
    for (int k = 1; k <= 7; ++k) {
      for (int s = 1; s <= 4; ++s) {
        for (int p = 0; p <= 3; ++p) {
          if (in + 2 * p < k) continue;
          CHECK(conv_output_dim(in, k, s, p) == testsupport::oracle_conv_dim(in, k, s, p));
          if (p < k) {
            CHECK(pool_output_dim(in, k, s, p) == testsupport::oracle_pool_dim(in, k, s, p));
          }
          if (p == 0) {
            CHECK(conv_output_dim(in, k, s, p) <= in);
            CHECK(pool_output_dim(in, k, s, p) <= in);
          }
        }
      }
    }
  }
}

TEST_CASE("infer_shapes examples") {
  SUBCASE("conv on 28x28") {
    const auto g = parse_network(R"(
layer { name: "d" type: "Input" input_dim: 28 input_dim: 28 input_dim: 1 }
layer { name: "c" type: "Convolution" kernel_h: 5 kernel_w: 5 stride_h: 1 stride_w: 1 num_output: 6 }
layer { name: "o" type: "Output" })");
    const auto t = infer_shapes(g);
    CHECK(t.at(0) == GridShape{28, 28, 1});
    CHECK(t.at(1) == GridShape{24, 24, 6});
    CHECK(t.at(2) == GridShape{24, 24, 6});
    CHECK_FALSE(t.flattened[2]);
  }
  SUBCASE("concat sums features") {
    const auto g = parse_network(R"(
layer { name: "a" type: "Input" input_dim: 10 input_dim: 10 input_dim: 3 }
layer { name: "b" type: "Input" input_dim: 10 input_dim: 10 input_dim: 5 }
layer { name: "m" type: "Concat" bottom: "a" bottom: "b" }
layer { name: "o" type: "Output" bottom: "m" })");
    CHECK(infer_shapes(g).at(2) == GridShape{10, 10, 8});
  }
  SUBCASE("concat mismatch") {
    const auto g = parse_network(R"(
layer { name: "a" type: "Input" input_dim: 10 input_dim: 10 input_dim: 3 }
layer { name: "b" type: "Input" input_dim: 9 input_dim: 10 input_dim: 5 }
layer { name: "m" type: "Concat" bottom: "a" bottom: "b" }
layer { name: "o" type: "Output" bottom: "m" })");
    try {
      infer_shapes(g);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
  }
  SUBCASE("inner product flattens; conv afterwards is rejected") {
    const auto g = parse_network(R"(
layer { name: "d" type: "Input" input_dim: 8 input_dim: 8 input_dim: 1 }
layer { name: "fc" type: "InnerProduct" num_output: 16 }
layer { name: "r" type: "ReLU" }
layer { name: "c" type: "Convolution" kernel_h: 1 kernel_w: 1 stride_h: 1 stride_w: 1 num_output: 2 }
layer { name: "o" type: "Output" })");
    try {
      infer_shapes(g);
      FAIL("expected ConvAfterFlatten");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConvAfterFlatten);
    }
  }
  SUBCASE("kernel too large names the layer") {
    const auto g = parse_network(R"(
layer { name: "d" type: "Input" input_dim: 4 input_dim: 4 input_dim: 1 }
layer { name: "big" type: "Convolution" kernel_h: 5 kernel_w: 1 stride_h: 1 stride_w: 1 num_output: 2 }
layer { name: "o" type: "Output" })");
    try {
      infer_shapes(g);
      FAIL("expected KernelTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::KernelTooLarge);
      CHECK(std::string(e.what()).find("big") != std::string::npos);
    }
  }
}

TEST_CASE("infer_shapes agrees with the window-enumeration oracle") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto g = testsupport::random_dag(seed);
    const auto oracle = testsupport::oracle_shapes(g);
    REQUIRE(oracle.has_value());
    const auto t = infer_shapes(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(t.at(i).height == (*oracle)[i].h);
      CHECK(t.at(i).width == (*oracle)[i].w);
      CHECK(t.at(i).features == (*oracle)[i].f);
      CHECK(t.flattened[i] == (*oracle)[i].flat);
    }
  }
}
