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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lrfact/tensor.hpp"

namespace lrfact {

using Bias = std::optional<std::vector<float>>;

// Per-spatial-axis convolution hyperparameters; every vector has one entry
// per spatial dimension.
struct ConvGeometry {
  std::vector<std::size_t> stride;
  std::vector<std::size_t> padding;
  std::vector<std::size_t> dilation;

  static ConvGeometry unit(std::size_t dims);  // stride 1, no padding, dilation 1
  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

// Dense affine map y = W x + b with W stored (out_features x in_features).
struct LinearLayer {
  Matrix weight;
  Bias bias;

  std::size_t in_features() const { return weight.cols(); }
  std::size_t out_features() const { return weight.rows(); }
  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

// Cross-correlation over 1-3 spatial axes. Weight layout [C_in, C_out, K...].
struct ConvLayer {
  Tensor weight;
  Bias bias;
  ConvGeometry geometry;

  std::size_t spatial_dims() const { return weight.rank() - 2; }
  std::size_t in_channels() const { return weight.dim(0); }
  std::size_t out_channels() const { return weight.dim(1); }
  Shape kernel() const { return {weight.shape().begin() + 2, weight.shape().end()}; }
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

// Linear encoder-decoder: y = decoder (encoder x) + b, never materializing
// the product. encoder is (r x in), decoder is (out x r).
struct LedLayer {
  Matrix encoder;
  Matrix decoder;
  Bias bias;

  std::size_t rank() const { return encoder.rows(); }
  std::size_t in_features() const { return encoder.cols(); }
  std::size_t out_features() const { return decoder.rows(); }
  friend bool operator==(const LedLayer&, const LedLayer&) = default;
};

// Convolution encoder-decoder: encoder [C_in, r, K...] carries the original
// geometry; decoder [r, C_out, 1...] is pointwise and carries the bias.
struct CedLayer {
  Tensor encoder;
  Tensor decoder;
  Bias bias;
  ConvGeometry geometry;

  std::size_t spatial_dims() const { return encoder.rank() - 2; }
  std::size_t rank() const { return encoder.dim(1); }
  std::size_t in_channels() const { return encoder.dim(0); }
  std::size_t out_channels() const { return decoder.dim(1); }
  Shape kernel() const { return {encoder.shape().begin() + 2, encoder.shape().end()}; }
  friend bool operator==(const CedLayer&, const CedLayer&) = default;
};

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

struct FlattenLayer {
  friend bool operator==(const FlattenLayer&, const FlattenLayer&) = default;
};

using LayerKind = std::variant<LinearLayer, ConvLayer, LedLayer, CedLayer, ReluLayer, FlattenLayer>;

struct Layer {
  std::string name;
  LayerKind kind;

  // "linear", "conv2d", "led", "ced1d", "relu", "flatten", ...
  std::string kind_name() const;
  bool is_factorizable() const {
    return std::holds_alternative<LinearLayer>(kind) || std::holds_alternative<ConvLayer>(kind);
  }
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct Model {
  std::string name;
  Shape input_shape;  // per sample, batch axis excluded
  std::vector<Layer> layers;

  friend bool operator==(const Model&, const Model&) = default;
};

/// Checks the structural invariants of a single layer (tensor arities,
/// shared rank axes, bias lengths, geometry arity, finiteness). Throws
/// ShapeError or ValueError naming the layer.
void validate_layer(const Layer& layer);

/// Output shape of `layer` for a per-sample input shape. Throws ShapeError
/// naming the layer when the input does not fit.
Shape layer_output_shape(const Layer& layer, const Shape& input);

/// Per-sample input shape of every layer followed by the model output
/// shape (size layers + 1). Validates every layer and unique names.
std::vector<Shape> infer_shapes(const Model& model);

void validate_model(const Model& model);

/// floor((len + 2 pad - dilation (k - 1) - 1) / stride) + 1, or 0 when the
/// dilated kernel does not fit.
std::size_t conv_output_length(std::size_t len, std::size_t kernel, std::size_t stride,
                               std::size_t padding, std::size_t dilation);

}  // namespace lrfact
