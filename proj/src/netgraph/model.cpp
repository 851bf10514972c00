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

#include "lrfact/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lrfact/error.hpp"
#include "overloaded.hpp"

namespace lrfact {
namespace {

using detail::overloaded;

void check_bias(const Bias& bias, std::size_t expected, const std::string& layer) {
  if (bias && bias->size() != expected) {
    throw ShapeError(
        "bias length " + std::to_string(bias->size()) + " != " + std::to_string(expected), layer);
  }
  if (bias && !std::all_of(bias->begin(), bias->end(), [](float v) { return std::isfinite(v); }))
    throw ValueError("layer '" + layer + "': bias contains non-finite values");
}

void check_geometry(const ConvGeometry& g, std::size_t dims, const std::string& layer) {
  if (g.stride.size() != dims || g.padding.size() != dims || g.dilation.size() != dims)
    throw ShapeError("geometry arity does not match " + std::to_string(dims) + " spatial dims",
                     layer);
  for (std::size_t i = 0; i < dims; ++i) {
    if (g.stride[i] < 1) throw ShapeError("stride must be >= 1", layer);
    if (g.dilation[i] < 1) throw ShapeError("dilation must be >= 1", layer);
  }
}

void check_conv_weight(const Tensor& w, const std::string& what, const std::string& layer) {
  if (w.rank() < 3 || w.rank() > 5)
    throw ShapeError(what + " must have 3 to 5 axes, got " + shape_to_string(w.shape()), layer);
  for (std::size_t d : w.shape())
    if (d == 0) throw ShapeError(what + " has a zero-length axis", layer);
  if (!w.all_finite()) throw ValueError("layer '" + layer + "': " + what + " is not finite");
}

void check_matrix(const Matrix& m, const std::string& what, const std::string& layer) {
  if (m.rows() == 0 || m.cols() == 0) throw ShapeError(what + " is empty", layer);
  if (!m.all_finite()) throw ValueError("layer '" + layer + "': " + what + " is not finite");
}

Shape conv_output(const Shape& in, std::size_t in_channels, std::size_t out_channels,
                  const Shape& kernel, const ConvGeometry& g, const std::string& layer) {
  const std::size_t dims = kernel.size();
  if (in.size() != dims + 1)
    throw ShapeError(
        "expects input [C, " + std::to_string(dims) + " spatial], got " + shape_to_string(in),
        layer);
  if (in[0] != in_channels)
    throw ShapeError(
        "expects " + std::to_string(in_channels) + " input channels, got " + std::to_string(in[0]),
        layer);
  Shape out{out_channels};
  for (std::size_t i = 0; i < dims; ++i) {
    const std::size_t len =
        conv_output_length(in[i + 1], kernel[i], g.stride[i], g.padding[i], g.dilation[i]);
    if (len == 0) throw ShapeError("kernel does not fit input " + shape_to_string(in), layer);
    out.push_back(len);
  }
  return out;
}

}  // namespace

ConvGeometry ConvGeometry::unit(std::size_t dims) {
  return {std::vector<std::size_t>(dims, 1), std::vector<std::size_t>(dims, 0),
          std::vector<std::size_t>(dims, 1)};
}

std::string Layer::kind_name() const {
  return std::visit(
      overloaded{
          [](const LinearLayer&) -> std::string { return "linear"; },
          [](const ConvLayer& c) { return "conv" + std::to_string(c.spatial_dims()) + "d"; },
          [](const LedLayer&) -> std::string { return "led"; },
          [](const CedLayer& c) { return "ced" + std::to_string(c.spatial_dims()) + "d"; },
          [](const ReluLayer&) -> std::string { return "relu"; },
          [](const FlattenLayer&) -> std::string { return "flatten"; },
      },
      kind);
}

std::size_t conv_output_length(std::size_t len, std::size_t kernel, std::size_t stride,
                               std::size_t padding, std::size_t dilation) {
  const std::size_t span = dilation * (kernel - 1) + 1;
  const std::size_t padded = len + 2 * padding;
  if (span > padded || stride == 0) return 0;
  return (padded - span) / stride + 1;
}

void validate_layer(const Layer& layer) {
  const std::string& name = layer.name;
  if (name.empty()) throw ShapeError("layer name must not be empty");
  std::visit(overloaded{
                 [&](const LinearLayer& l) {
                   check_matrix(l.weight, "weight", name);
                   check_bias(l.bias, l.out_features(), name);
                 },
                 [&](const ConvLayer& c) {
                   check_conv_weight(c.weight, "weight", name);
                   check_geometry(c.geometry, c.spatial_dims(), name);
                   check_bias(c.bias, c.out_channels(), name);
                 },
                 [&](const LedLayer& l) {
                   check_matrix(l.encoder, "encoder", name);
                   check_matrix(l.decoder, "decoder", name);
                   if (l.encoder.rows() != l.decoder.cols())
                     throw ShapeError("encoder rank " + std::to_string(l.encoder.rows()) +
                                          " != decoder rank " + std::to_string(l.decoder.cols()),
                                      name);
                   check_bias(l.bias, l.out_features(), name);
                 },
                 [&](const CedLayer& c) {
                   check_conv_weight(c.encoder, "encoder", name);
                   check_conv_weight(c.decoder, "decoder", name);
                   if (c.encoder.rank() != c.decoder.rank())
                     throw ShapeError("encoder and decoder arity differ", name);
                   if (c.encoder.dim(1) != c.decoder.dim(0))
                     throw ShapeError("encoder rank axis " + std::to_string(c.encoder.dim(1)) +
                                          " != decoder rank axis " +
                                          std::to_string(c.decoder.dim(0)),
                                      name);
                   for (std::size_t i = 2; i < c.decoder.rank(); ++i)
                     if (c.decoder.dim(i) != 1)
                       throw ShapeError("decoder kernel must be all ones", name);
                   check_geometry(c.geometry, c.spatial_dims(), name);
                   check_bias(c.bias, c.out_channels(), name);
                 },
                 [](const ReluLayer&) {},
                 [](const FlattenLayer&) {},
             },
             layer.kind);
}

Shape layer_output_shape(const Layer& layer, const Shape& in) {
  const std::string& name = layer.name;
  return std::visit(
      overloaded{
          [&](const LinearLayer& l) -> Shape {
            if (in.size() != 1 || in[0] != l.in_features())
              throw ShapeError("expects input [" + std::to_string(l.in_features()) + "], got " +
                                   shape_to_string(in),
                               name);
            return {l.out_features()};
          },
          [&](const LedLayer& l) -> Shape {
            if (in.size() != 1 || in[0] != l.in_features())
              throw ShapeError("expects input [" + std::to_string(l.in_features()) + "], got " +
                                   shape_to_string(in),
                               name);
            return {l.out_features()};
          },
          [&](const ConvLayer& c) {
            return conv_output(in, c.in_channels(), c.out_channels(), c.kernel(), c.geometry, name);
          },
          [&](const CedLayer& c) {
            return conv_output(in, c.in_channels(), c.out_channels(), c.kernel(), c.geometry, name);
          },
          [&](const ReluLayer&) { return in; },
          [&](const FlattenLayer&) -> Shape { return {shape_numel(in)}; },
      },
      layer.kind);
}

std::vector<Shape> infer_shapes(const Model& model) {
  if (model.input_shape.empty()) throw ShapeError("model input shape must not be empty");
  for (std::size_t d : model.input_shape)
    if (d == 0) throw ShapeError("model input shape has a zero-length axis");
  std::unordered_set<std::string> seen;
  std::vector<Shape> shapes{model.input_shape};
  for (const Layer& layer : model.layers) {
    if (!seen.insert(layer.name).second) throw ShapeError("duplicate layer name", layer.name);
    validate_layer(layer);
    shapes.push_back(layer_output_shape(layer, shapes.back()));
  }
  return shapes;
}

void validate_model(const Model& model) { (void)infer_shapes(model); }

}  // namespace lrfact
