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

#pragma once

#include <cmath>
#include <random>
#include <string>

#include "lrfact/factorizer.hpp"
#include "lrfact/model.hpp"
#include "oracles.hpp"

namespace lrfact::testing {

inline std::vector<float> random_bias(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<float> dist(-0.1f, 0.1f);
  std::vector<float> b(n);
  for (float& v : b) v = dist(gen);
  return b;
}

inline Layer linear(std::string name, std::size_t out, std::size_t in, std::mt19937_64& gen,
                    bool bias = true) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(in));
  return {std::move(name), LinearLayer{random_matrix(out, in, gen, -scale, scale),
                                       bias ? Bias(random_bias(out, gen)) : std::nullopt}};
}

// Linear layer whose weight has rank exactly `rank` (almost surely).
inline Layer low_rank_linear(std::string name, std::size_t out, std::size_t in, std::size_t rank,
                             std::mt19937_64& gen) {
  const float scale = 1.0f / std::sqrt(std::sqrt(static_cast<float>(in * rank)));
  Matrix w = dense_product(random_matrix(out, rank, gen, -scale, scale),
                           random_matrix(rank, in, gen, -scale, scale));
  return {std::move(name), LinearLayer{std::move(w), random_bias(out, gen)}};
}

// Conv layer whose rearranged (C_in prod K) x C_out weight has rank `rank`.
inline Layer low_rank_conv(std::string name, std::size_t cin, std::size_t cout, const Shape& kernel,
                           std::size_t rank, ConvGeometry geometry, std::mt19937_64& gen) {
  const std::size_t rows = cin * shape_numel(kernel);
  const float scale = 1.0f / std::sqrt(std::sqrt(static_cast<float>(rows * rank)));
  const Matrix flat = dense_product(random_matrix(rows, rank, gen, -scale, scale),
                                    random_matrix(rank, cout, gen, -scale, scale));
  Shape shape{cin, cout};
  shape.insert(shape.end(), kernel.begin(), kernel.end());
  Tensor w(shape);
  const std::size_t nk = shape_numel(kernel);
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t k = 0; k < nk; ++k) w[(c * cout + o) * nk + k] = flat(c * nk + k, o);
  return {std::move(name), ConvLayer{std::move(w), random_bias(cout, gen), std::move(geometry)}};
}

inline Layer relu(std::string name) { return {std::move(name), ReluLayer{}}; }
inline Layer flatten(std::string name) { return {std::move(name), FlattenLayer{}}; }

// 784 -> 512 -> 10 MLP with ReLU.
inline Model mlp_fixture(std::uint64_t seed = 1) {
  std::mt19937_64 gen(seed);
  Model m{"mlp", {784}, {}};
  m.layers.push_back(linear("fc1", 512, 784, gen));
  m.layers.push_back(relu("act1"));
  m.layers.push_back(linear("fc2", 10, 512, gen));
  return m;
}

// Three 1024x1024 linears with ReLU in between.
inline Model wide_mlp(std::uint64_t seed = 3) {
  std::mt19937_64 gen(seed);
  Model m{"wide_mlp", {1024}, {}};
  m.layers.push_back(linear("fc1", 1024, 1024, gen));
  m.layers.push_back(relu("act1"));
  m.layers.push_back(linear("fc2", 1024, 1024, gen));
  m.layers.push_back(relu("act2"));
  m.layers.push_back(linear("fc3", 1024, 1024, gen));
  return m;
}

inline Model identity_model(std::size_t n) {
  return {"identity", {n}, {Layer{"id", LinearLayer{Matrix::identity(n), std::nullopt}}}};
}

// Small valid model using every layer kind the format knows about. Conv
// stacks (1-3 spatial dims) are followed by flatten and a dense head.
inline Model random_model(std::mt19937_64& gen) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + gen() % (hi - lo + 1); };
  auto maybe_bias = [&](std::size_t n) -> Bias {
    if (gen() % 2) return random_bias(n, gen);
    return std::nullopt;
  };
  Model m{"random_" + std::to_string(gen() % 1000), {}, {}};
  std::size_t features = 0;
  if (gen() % 2) {
    const std::size_t dims = pick(1, 3);
    std::size_t channels = pick(1, 3);
    Shape spatial;
    for (std::size_t d = 0; d < dims; ++d) spatial.push_back(pick(3, 6));
    m.input_shape = {channels};
    m.input_shape.insert(m.input_shape.end(), spatial.begin(), spatial.end());
    const std::size_t convs = pick(1, 2);
    for (std::size_t i = 0; i < convs; ++i) {
      const std::size_t out = pick(1, 4);
      Shape kernel;
      ConvGeometry g;
      for (std::size_t d = 0; d < dims; ++d) {
        kernel.push_back(pick(1, std::min<std::size_t>(3, spatial[d])));
        g.stride.push_back(pick(1, 2));
        g.padding.push_back(pick(0, 1));
        g.dilation.push_back(1);
        spatial[d] = (spatial[d] + 2 * g.padding[d] - kernel[d]) / g.stride[d] + 1;
      }
      const std::string name = "conv" + std::to_string(i);
      if (gen() % 2) {
        Shape ws{channels, out};
        ws.insert(ws.end(), kernel.begin(), kernel.end());
        m.layers.push_back({name, ConvLayer{random_tensor(ws, gen), maybe_bias(out), g}});
      } else {
        const std::size_t r = pick(1, 3);
        Shape es{channels, r}, ds{r, out};
        es.insert(es.end(), kernel.begin(), kernel.end());
        ds.insert(ds.end(), dims, 1);
        m.layers.push_back(
            {name, CedLayer{random_tensor(es, gen), random_tensor(ds, gen), maybe_bias(out), g}});
      }
      m.layers.push_back(relu("act" + std::to_string(i)));
      channels = out;
    }
    m.layers.push_back(flatten("flat"));
    features = channels * shape_numel(spatial);
  } else {
    features = pick(1, 12);
    m.input_shape = {features};
  }
  const std::size_t dense = pick(1, 3);
  for (std::size_t i = 0; i < dense; ++i) {
    const std::size_t out = pick(1, 12);
    const std::string name = "fc" + std::to_string(i);
    if (gen() % 2) {
      m.layers.push_back({name, LinearLayer{random_matrix(out, features, gen), maybe_bias(out)}});
    } else {
      const std::size_t r = pick(1, 4);
      m.layers.push_back({name, LedLayer{random_matrix(r, features, gen),
                                         random_matrix(out, r, gen), maybe_bias(out)}});
    }
    features = out;
  }
  return m;
}

}  // namespace lrfact::testing
