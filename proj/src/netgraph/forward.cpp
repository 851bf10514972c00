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

#include "lrfact/forward.hpp"

#include <algorithm>
#include <array>

#include "lrfact/error.hpp"
#include "overloaded.hpp"

namespace lrfact {
namespace {

using detail::overloaded;

// Four independent partial sums, combined in a fixed order.
inline double dot(const float* a, const float* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(a[i]) * b[i];
    s1 += static_cast<double>(a[i + 1]) * b[i + 1];
    s2 += static_cast<double>(a[i + 2]) * b[i + 2];
    s3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  for (; i < n; ++i) s0 += static_cast<double>(a[i]) * b[i];
  return (s0 + s1) + (s2 + s3);
}

// out[s, o] = sum_i in[s, i] * w[o, i] (+ bias[o]) for every sample s.
void affine(std::span<const float> in, std::size_t samples, const Matrix& w, const Bias& bias,
            std::span<float> out) {
  const std::size_t n = w.cols(), m = w.rows();
  for (std::size_t s = 0; s < samples; ++s) {
    const float* x = in.data() + s * n;
    float* y = out.data() + s * m;
    for (std::size_t o = 0; o < m; ++o) {
      double acc = dot(w.row(o).data(), x, n);
      if (bias) acc += (*bias)[o];
      y[o] = static_cast<float>(acc);
    }
  }
}

// A conv problem lifted to exactly three spatial axes; unused axes have
// extent 1, stride 1, no padding and dilation 1.
struct Conv3 {
  std::size_t in_channels = 0, out_channels = 0;
  std::array<std::size_t, 3> in{1, 1, 1}, out{1, 1, 1}, kernel{1, 1, 1};
  std::array<std::size_t, 3> stride{1, 1, 1}, padding{0, 0, 0}, dilation{1, 1, 1};
};

Conv3 lift(const Shape& sample_in, const Shape& sample_out, const Shape& kernel,
           const ConvGeometry& g, std::size_t in_channels, std::size_t out_channels) {
  Conv3 p;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  const std::size_t dims = kernel.size();
  const std::size_t shift = 3 - dims;
  for (std::size_t i = 0; i < dims; ++i) {
    p.in[shift + i] = sample_in[i + 1];
    p.out[shift + i] = sample_out[i + 1];
    p.kernel[shift + i] = kernel[i];
    p.stride[shift + i] = g.stride[i];
    p.padding[shift + i] = g.padding[i];
    p.dilation[shift + i] = g.dilation[i];
  }
  return p;
}

// Cross-correlation of one sample. Weight layout [C_in, C_out, K0, K1, K2].
void conv_sample(const Conv3& p, const float* x, const float* w, const Bias& bias, float* y) {
  const std::size_t ksize = p.kernel[0] * p.kernel[1] * p.kernel[2];
  const std::size_t in_plane = p.in[0] * p.in[1] * p.in[2];
  const std::size_t out_plane = p.out[0] * p.out[1] * p.out[2];
  for (std::size_t o = 0; o < p.out_channels; ++o) {
    for (std::size_t z = 0; z < p.out[0]; ++z)
      for (std::size_t yy = 0; yy < p.out[1]; ++yy)
        for (std::size_t xx = 0; xx < p.out[2]; ++xx) {
          double acc = 0.0;
          for (std::size_t c = 0; c < p.in_channels; ++c) {
            const float* wk = w + (c * p.out_channels + o) * ksize;
            const float* xc = x + c * in_plane;
            for (std::size_t k0 = 0; k0 < p.kernel[0]; ++k0) {
              const std::ptrdiff_t i0 =
                  static_cast<std::ptrdiff_t>(z * p.stride[0] + k0 * p.dilation[0]) -
                  static_cast<std::ptrdiff_t>(p.padding[0]);
              if (i0 < 0 || i0 >= static_cast<std::ptrdiff_t>(p.in[0])) continue;
              for (std::size_t k1 = 0; k1 < p.kernel[1]; ++k1) {
                const std::ptrdiff_t i1 =
                    static_cast<std::ptrdiff_t>(yy * p.stride[1] + k1 * p.dilation[1]) -
                    static_cast<std::ptrdiff_t>(p.padding[1]);
                if (i1 < 0 || i1 >= static_cast<std::ptrdiff_t>(p.in[1])) continue;
                for (std::size_t k2 = 0; k2 < p.kernel[2]; ++k2) {
                  const std::ptrdiff_t i2 =
                      static_cast<std::ptrdiff_t>(xx * p.stride[2] + k2 * p.dilation[2]) -
                      static_cast<std::ptrdiff_t>(p.padding[2]);
                  if (i2 < 0 || i2 >= static_cast<std::ptrdiff_t>(p.in[2])) continue;
                  const std::size_t xi =
                      (static_cast<std::size_t>(i0) * p.in[1] + static_cast<std::size_t>(i1)) *
                          p.in[2] +
                      static_cast<std::size_t>(i2);
                  acc +=
                      static_cast<double>(xc[xi]) * wk[(k0 * p.kernel[1] + k1) * p.kernel[2] + k2];
                }
              }
            }
          }
          if (bias) acc += (*bias)[o];
          y[o * out_plane + (z * p.out[1] + yy) * p.out[2] + xx] = static_cast<float>(acc);
        }
  }
}

Tensor run_conv(const Tensor& batch, const Shape& sample_in, const Shape& sample_out,
                const Tensor& weight, const Bias& bias, const ConvGeometry& g) {
  const std::size_t samples = batch.dim(0);
  const Shape kernel(weight.shape().begin() + 2, weight.shape().end());
  const Conv3 p = lift(sample_in, sample_out, kernel, g, weight.dim(0), weight.dim(1));
  Shape out_shape{samples};
  out_shape.insert(out_shape.end(), sample_out.begin(), sample_out.end());
  Tensor out(out_shape);
  const std::size_t in_stride = shape_numel(sample_in);
  const std::size_t out_stride = shape_numel(sample_out);
  for (std::size_t s = 0; s < samples; ++s) {
    conv_sample(p, batch.data().data() + s * in_stride, weight.data().data(), bias,
                out.data().data() + s * out_stride);
  }
  return out;
}

Shape with_batch(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

Tensor forward_layer(const Layer& layer, const Tensor& batch) {
  if (batch.rank() < 2) throw ShapeError("batch must have a leading batch axis", layer.name);
  const std::size_t samples = batch.dim(0);
  const Shape sample_in(batch.shape().begin() + 1, batch.shape().end());
  const Shape sample_out = layer_output_shape(layer, sample_in);

  return std::visit(
      overloaded{
          [&](const LinearLayer& l) {
            Tensor out(with_batch(samples, sample_out));
            affine(batch.data(), samples, l.weight, l.bias, out.data());
            return out;
          },
          [&](const LedLayer& l) {
            std::vector<float> hidden(samples * l.rank());
            affine(batch.data(), samples, l.encoder, std::nullopt, hidden);
            Tensor out(with_batch(samples, sample_out));
            affine(hidden, samples, l.decoder, l.bias, out.data());
            return out;
          },
          [&](const ConvLayer& c) {
            return run_conv(batch, sample_in, sample_out, c.weight, c.bias, c.geometry);
          },
          [&](const CedLayer& c) {
            Shape hidden_shape = sample_out;
            hidden_shape[0] = c.rank();
            const Tensor hidden =
                run_conv(batch, sample_in, hidden_shape, c.encoder, std::nullopt, c.geometry);
            return run_conv(hidden, hidden_shape, sample_out, c.decoder, c.bias,
                            ConvGeometry::unit(c.spatial_dims()));
          },
          [&](const ReluLayer&) {
            std::vector<float> data(batch.data().begin(), batch.data().end());
            for (float& v : data) v = std::max(v, 0.0f);
            return Tensor(batch.shape(), std::move(data));
          },
          [&](const FlattenLayer&) {
            return Tensor(with_batch(samples, sample_out),
                          std::vector<float>(batch.data().begin(), batch.data().end()));
          },
      },
      layer.kind);
}

Tensor forward(const Model& model, const Tensor& batch) {
  if (batch.rank() != model.input_shape.size() + 1 ||
      !std::equal(model.input_shape.begin(), model.input_shape.end(), batch.shape().begin() + 1)) {
    // Name the first layer that rejects the actual shape, if any does.
    if (batch.rank() >= 2) {
      Shape shape(batch.shape().begin() + 1, batch.shape().end());
      for (const Layer& layer : model.layers) shape = layer_output_shape(layer, shape);
    }
    throw ShapeError("batch shape " + shape_to_string(batch.shape()) +
                         " does not match model input [N, " +
                         shape_to_string(model.input_shape).substr(1),
                     "input");
  }
  Tensor current = batch;
  for (const Layer& layer : model.layers) current = forward_layer(layer, current);
  return current;
}

}  // namespace lrfact
