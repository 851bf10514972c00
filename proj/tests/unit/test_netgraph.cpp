// Copyright 2026 The lrfact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "lrfact/accounting.hpp"
#include "lrfact/error.hpp"
#include "lrfact/forward.hpp"
#include "lrfact/model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace lrfact;
namespace t = lrfact::testing;

namespace {

Tensor batch_of(const Shape& sample, std::vector<float> values) {
  Shape s{values.size() / shape_numel(sample)};
  s.insert(s.end(), sample.begin(), sample.end());
  return Tensor(s, std::move(values));
}

Tensor conv_weight(std::size_t cin, std::size_t cout, Shape kernel, std::vector<float> v) {
  Shape s{cin, cout};
  s.insert(s.end(), kernel.begin(), kernel.end());
  return Tensor(s, std::move(v));
}

}  // namespace

TEST_CASE("forward examples") {
  Model id = t::identity_model(3);
  CHECK(forward(id, batch_of({3}, {1, 2, 3})).values() == std::vector<float>{1, 2, 3});

  Model led{"led", {2}, {}};
  led.layers.push_back(
      {"l", LedLayer{Matrix::from_rows({{1, 0}}), Matrix::from_rows({{1}, {0}}), std::nullopt}});
  CHECK(forward(led, batch_of({2}, {5, 7})).values() == std::vector<float>{5, 0});

  Model conv{"conv", {1, 3}, {}};
  conv.layers.push_back(
      {"c", ConvLayer{conv_weight(1, 1, {2}, {1, -1}), std::nullopt, ConvGeometry::unit(1)}});
  const Tensor y = forward(conv, batch_of({1, 3}, {1, 3, 6}));
  CHECK(y.shape() == Shape{1, 1, 2});
  CHECK(y.values() == std::vector<float>{-2, -3});
}

TEST_CASE("forward applies bias, relu and flatten") {
  Model m{"m", {1, 2, 2}, {}};
  m.layers.push_back(t::flatten("flat"));
  m.layers.push_back({"fc", LinearLayer{Matrix::from_rows({{1, -1, 0, 0}, {0, 0, 2, 0}}),
                                        std::vector<float>{0.5f, -10.0f}}});
  m.layers.push_back(t::relu("act"));
  const Tensor y = forward(m, batch_of({1, 2, 2}, {3, 1, 2, 9, 0, 0, 0, 0}));
  CHECK(y.shape() == Shape{2, 2});
  CHECK(y.values() == std::vector<float>{2.5f, 0.0f, 0.5f, 0.0f});
}

TEST_CASE("forward rejects mismatched shapes and names the layer") {
  Model m = t::mlp_fixture();
  try {
    forward(m, Tensor({2, 783}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.layer() == "fc1");
  }

  Model bad{"bad", {4}, {}};
  std::mt19937_64 gen(1);
  bad.layers.push_back(t::linear("a", 3, 4, gen));
  bad.layers.push_back(t::linear("b", 2, 5, gen));
  CHECK_THROWS_AS(validate_model(bad), ShapeError);
  try {
    infer_shapes(bad);
  } catch (const ShapeError& e) {
    CHECK(e.layer() == "b");
  }
}

TEST_CASE("model validation rejects structural errors") {
  std::mt19937_64 gen(2);
  Model dup{"dup", {4}, {t::linear("x", 4, 4, gen), t::linear("x", 4, 4, gen)}};
  CHECK_THROWS(validate_model(dup));

  Layer led{"led", LedLayer{Matrix(2, 4), Matrix(3, 3), std::nullopt}};
  CHECK_THROWS_AS(validate_layer(led), ShapeError);

  Layer bias{"b", LinearLayer{Matrix(3, 4), std::vector<float>(2)}};
  CHECK_THROWS_AS(validate_layer(bias), ShapeError);

  Layer ced{"ced",
            CedLayer{Tensor({2, 3, 3}), Tensor({3, 4, 2}), std::nullopt, ConvGeometry::unit(1)}};
  CHECK_THROWS_AS(validate_layer(ced), ShapeError);

  Layer geom{"g", ConvLayer{Tensor({2, 3, 3}), std::nullopt, ConvGeometry::unit(2)}};
  CHECK_THROWS_AS(validate_layer(geom), ShapeError);
}

TEST_CASE("count_params examples") {
  std::mt19937_64 gen(3);
  Model lin{"m", {4}, {t::linear("fc", 4, 4, gen)}};
  CHECK(count_params(lin).total == 20);

  Model led{"m", {4}, {{"l", LedLayer{Matrix(1, 4), Matrix(4, 1), std::vector<float>(4)}}}};
  CHECK(count_params(led).total == 12);

  Model ced{"m",
            {2, 5},
            {{"c", CedLayer{Tensor({2, 1, 3}), Tensor({1, 8, 1}), std::vector<float>(8),
                            ConvGeometry::unit(1)}}}};
  CHECK(count_params(ced).total == 22);
}

TEST_CASE("count_flops examples") {
  Model lin{"m", {3}, {{"fc", LinearLayer{Matrix(4, 3), std::vector<float>(4)}}}};
  CHECK(count_flops(lin, 1).total == 28);
  CHECK(count_flops(lin, 5).total == 140);

  Model led{"m", {3}, {{"l", LedLayer{Matrix(1, 3), Matrix(4, 1), std::vector<float>(4)}}}};
  CHECK(count_flops(led, 1).total == 18);

  Model conv{
      "m", {1, 3}, {{"c", ConvLayer{Tensor({1, 1, 2}), std::nullopt, ConvGeometry::unit(1)}}}};
  CHECK(count_flops(conv, 1).total == 8);

  Model act{"m", {2, 3}, {t::relu("r"), t::flatten("f")}};
  const Counts c = count_flops(act, 2);
  CHECK(c.per_layer == std::vector<std::uint64_t>{12, 0});
  CHECK(c.total == 12);
}

TEST_CASE("factorized layers count fewer flops when they pass the gate") {
  for (std::size_t m = 1; m <= 24; ++m)
    for (std::size_t n = 1; n <= 24; ++n)
      for (std::size_t r = 1; r <= std::min(m, n); ++r) {
        if (r * (m + n) >= m * n) continue;
        Layer dense{"d", LinearLayer{Matrix(m, n), std::vector<float>(m)}};
        Layer led{"l", LedLayer{Matrix(r, n), Matrix(m, r), std::vector<float>(m)}};
        CHECK(layer_flops(led, {n}) < layer_flops(dense, {n}));
        CHECK(layer_flops(led, {n}) == 2 * r * (m + n) + m);
        CHECK(layer_params(led) < layer_params(dense));
      }
}

TEST_CASE("CED flops are below conv flops under the gate") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cin = 1 + gen() % 4, cout = 1 + gen() % 6, k = 1 + gen() % 3;
    const std::size_t m = cin * k * k, n = cout;
    for (std::size_t r = 1; r <= std::min(m, n); ++r) {
      if (r * (m + n) >= m * n) continue;
      Layer conv{"c", ConvLayer{Tensor({cin, cout, k, k}), std::vector<float>(cout),
                                ConvGeometry::unit(2)}};
      Layer ced{"c", CedLayer{Tensor({cin, r, k, k}), Tensor({r, cout, 1, 1}),
                              std::vector<float>(cout), ConvGeometry::unit(2)}};
      for (std::size_t batch : {1, 3, 17})
        CHECK(batch * layer_flops(ced, {cin, 7, 6}) < batch * layer_flops(conv, {cin, 7, 6}));
    }
  }
}

TEST_CASE("conv output dims and values agree with the naive oracle") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t dims = 1 + gen() % 3;
    const std::size_t cin = 1 + gen() % 3, cout = 1 + gen() % 3;
    Shape kernel, in{cin};
    ConvGeometry g;
    for (std::size_t d = 0; d < dims; ++d) {
      kernel.push_back(1 + gen() % 3);
      g.stride.push_back(1 + gen() % 2);
      g.padding.push_back(gen() % 3);
      g.dilation.push_back(1 + gen() % 2);
      const std::size_t span = g.dilation[d] * (kernel[d] - 1) + 1;
      in.push_back(std::max<std::size_t>(1, span - std::min(span - 1, 2 * g.padding[d])) +
                   gen() % 4);
    }
    Shape wshape{cin, cout};
    wshape.insert(wshape.end(), kernel.begin(), kernel.end());
    const Tensor w = t::random_tensor(wshape, gen);
    const Bias bias = t::random_bias(cout, gen);
    Layer layer{"c", ConvLayer{w, bias, g}};

    const Shape out = layer_output_shape(layer, in);
    for (std::size_t d = 0; d < dims; ++d) {
      const long expect = (static_cast<long>(in[d + 1] + 2 * g.padding[d]) -
                           static_cast<long>(g.dilation[d] * (kernel[d] - 1)) - 1) /
                              static_cast<long>(g.stride[d]) +
                          1;
      CHECK(static_cast<long>(out[d + 1]) == expect);
    }

    Shape bshape{2};
    bshape.insert(bshape.end(), in.begin(), in.end());
    const Tensor x = t::random_tensor(bshape, gen);
    const Tensor y = forward_layer(layer, x);
    const Tensor ref = t::naive_conv_batch(x, w, bias, g);
    REQUIRE(y.shape() == ref.shape());
    CHECK(t::max_abs_diff(y, ref) <= 1e-5);
  }
}

TEST_CASE("conv that does not fit its input is a shape error") {
  Layer layer{"c", ConvLayer{Tensor({1, 1, 5}), std::nullopt, ConvGeometry::unit(1)}};
  CHECK_THROWS_AS(layer_output_shape(layer, {1, 3}), ShapeError);
  CHECK(conv_output_length(3, 5, 1, 0, 1) == 0);
  CHECK(conv_output_length(3, 5, 1, 1, 1) == 1);
  CHECK(conv_output_length(10, 3, 2, 1, 2) == 4);
}

TEST_CASE("LED forward equals the materialized dense forward") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + gen() % 40, n = 1 + gen() % 40, r = 1 + gen() % 8;
    const Matrix a = t::random_matrix(m, r, gen), b = t::random_matrix(r, n, gen);
    const Bias bias = t::random_bias(m, gen);
    Model led{"led", {n}, {{"l", LedLayer{b, a, bias}}}};
    Model dense{"dense", {n}, {{"l", LinearLayer{t::dense_product(a, b), bias}}}};
    const Tensor x = t::random_tensor({4, n}, gen);
    // Per-entry scale of the product grows with r; keep the bound relative.
    CHECK(t::max_abs_diff(forward(led, x), forward(dense, x)) <= 1e-5 * std::max<double>(1, r));
  }
}

TEST_CASE("CED forward equals conv with the materialized weight") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dims = 1 + gen() % 3;
    const std::size_t cin = 1 + gen() % 3, cout = 1 + gen() % 4, r = 1 + gen() % 3;
    Shape kernel, in{cin}, enc{cin, r}, dec{r, cout};
    ConvGeometry g;
    for (std::size_t d = 0; d < dims; ++d) {
      kernel.push_back(1 + gen() % 3);
      enc.push_back(kernel.back());
      dec.push_back(1);
      g.stride.push_back(1 + gen() % 2);
      g.padding.push_back(gen() % 3);
      g.dilation.push_back(1 + gen() % 2);
      in.push_back(g.dilation[d] * (kernel[d] - 1) + 1 + gen() % 4);
    }
    const CedLayer ced{t::random_tensor(enc, gen), t::random_tensor(dec, gen),
                       t::random_bias(cout, gen), g};
    Shape bshape{2};
    bshape.insert(bshape.end(), in.begin(), in.end());
    const Tensor x = t::random_tensor(bshape, gen);
    const Tensor y = forward_layer({"c", ced}, x);
    const Tensor ref = t::naive_conv_batch(x, t::materialize_ced(ced), ced.bias, g);
    REQUIRE(y.shape() == ref.shape());
    CHECK(t::max_abs_diff(y, ref) <= 1e-4);
  }
}

TEST_CASE("forward is deterministic") {
  const Model m = t::mlp_fixture(9);
  std::mt19937_64 gen(1);
  const Tensor x = t::random_tensor({3, 784}, gen);
  CHECK(forward(m, x) == forward(m, x));
}

TEST_CASE("kind names") {
  CHECK(Layer{"a", ConvLayer{Tensor({1, 1, 1, 1}), std::nullopt, ConvGeometry::unit(2)}}
            .kind_name() == "conv2d");
  CHECK(Layer{"a",
              CedLayer{Tensor({1, 1, 1}), Tensor({1, 1, 1}), std::nullopt, ConvGeometry::unit(1)}}
            .kind_name() == "ced1d");
  CHECK(Layer{"a", ReluLayer{}}.kind_name() == "relu");
}
