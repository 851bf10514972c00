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

#include "lrfact/accounting.hpp"

#include "lrfact/error.hpp"
#include "overloaded.hpp"

namespace lrfact {
namespace {

using detail::overloaded;

std::uint64_t bias_count(const Bias& b) { return b ? b->size() : 0; }

std::uint64_t spatial_volume(const Shape& sample) {
  std::uint64_t v = 1;
  for (std::size_t i = 1; i < sample.size(); ++i) v *= sample[i];
  return v;
}

}  // namespace

std::uint64_t layer_params(const Layer& layer) {
  return std::visit(
      overloaded{
          [](const LinearLayer& l) -> std::uint64_t {
            return l.weight.size() + bias_count(l.bias);
          },
          [](const LedLayer& l) -> std::uint64_t {
            return l.rank() * (l.in_features() + l.out_features()) + bias_count(l.bias);
          },
          [](const ConvLayer& c) -> std::uint64_t { return c.weight.size() + bias_count(c.bias); },
          [](const CedLayer& c) -> std::uint64_t {
            return c.encoder.size() + c.decoder.size() + bias_count(c.bias);
          },
          [](const ReluLayer&) -> std::uint64_t { return 0; },
          [](const FlattenLayer&) -> std::uint64_t { return 0; },
      },
      layer.kind);
}

std::uint64_t layer_flops(const Layer& layer, const Shape& sample_in) {
  const Shape out = layer_output_shape(layer, sample_in);
  return std::visit(overloaded{
                        [&](const LinearLayer& l) -> std::uint64_t {
                          return 2 * l.weight.size() + bias_count(l.bias);
                        },
                        [&](const LedLayer& l) -> std::uint64_t {
                          return 2 * l.rank() * (l.in_features() + l.out_features()) +
                                 bias_count(l.bias);
                        },
                        [&](const ConvLayer& c) -> std::uint64_t {
                          const std::uint64_t positions = spatial_volume(out);
                          return 2 * c.weight.size() * positions + bias_count(c.bias) * positions;
                        },
                        [&](const CedLayer& c) -> std::uint64_t {
                          // Encoder and pointwise decoder both run at the output resolution.
                          const std::uint64_t positions = spatial_volume(out);
                          return 2 * (c.encoder.size() + c.decoder.size()) * positions +
                                 bias_count(c.bias) * positions;
                        },
                        [&](const ReluLayer&) -> std::uint64_t { return shape_numel(out); },
                        [&](const FlattenLayer&) -> std::uint64_t { return 0; },
                    },
                    layer.kind);
}

Counts count_params(const Model& model) {
  Counts c;
  for (const Layer& layer : model.layers) {
    c.per_layer.push_back(layer_params(layer));
    c.total += c.per_layer.back();
  }
  return c;
}

Counts count_flops(const Model& model, std::uint64_t batch_size) {
  const std::vector<Shape> shapes = infer_shapes(model);
  Counts c;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    c.per_layer.push_back(layer_flops(model.layers[i], shapes[i]) * batch_size);
    c.total += c.per_layer.back();
  }
  return c;
}

}  // namespace lrfact
