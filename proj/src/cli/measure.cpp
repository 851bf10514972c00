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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "lrfact/accounting.hpp"
#include "lrfact/cli.hpp"
#include "lrfact/error.hpp"
#include "lrfact/forward.hpp"

namespace lrfact::cli {

Tensor random_batch(const Shape& input_shape, std::size_t batch, std::uint64_t seed) {
  Shape shape{batch};
  shape.insert(shape.end(), input_shape.begin(), input_shape.end());
  Tensor t(shape);
  std::mt19937_64 gen(seed);
  for (float& v : t.data())
    v = static_cast<float>(2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0);
  return t;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

BenchResult benchmark(const Model& model, std::size_t batch, int repeats, int warmup,
                      std::uint64_t seed) {
  if (batch < 1 || repeats < 1 || warmup < 0)
    throw ValueError("benchmark needs batch >= 1, repeats >= 1, warmup >= 0");
  BenchResult r;
  r.batch = batch;
  r.warmup = warmup;
  r.flops = count_flops(model, batch).total;
  const Tensor input = random_batch(model.input_shape, batch, seed);

  // Keeps the optimizer from discarding the forward result.
  volatile float sink = 0.0f;
  for (int i = 0; i < warmup; ++i) sink = forward(model, input).data()[0];
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Tensor y = forward(model, input);
    const auto stop = std::chrono::steady_clock::now();
    sink = y.data()[0];
    r.samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  (void)sink;
  r.median_ms = quantile(r.samples_ms, 0.5);
  r.q1_ms = quantile(r.samples_ms, 0.25);
  r.q3_ms = quantile(r.samples_ms, 0.75);
  return r;
}

DiffResult compare_models(const Model& a, const Model& b, int trials, std::size_t batch,
                          std::uint64_t seed) {
  if (a.input_shape != b.input_shape) {
    throw ShapeError("input shapes differ: " + shape_to_string(a.input_shape) + " vs " +
                     shape_to_string(b.input_shape));
  }
  const Shape out_a = infer_shapes(a).back();
  const Shape out_b = infer_shapes(b).back();
  if (out_a != out_b) {
    throw ShapeError("output shapes differ: " + shape_to_string(out_a) + " vs " +
                     shape_to_string(out_b));
  }
  DiffResult d;
  double sum = 0.0;
  std::mt19937_64 seeds(seed);
  for (int t = 0; t < trials; ++t) {
    const Tensor x = random_batch(a.input_shape, batch, seeds());
    const Tensor ya = forward(a, x);
    const Tensor yb = forward(b, x);
    for (std::size_t i = 0; i < ya.size(); ++i) {
      const double delta = std::fabs(static_cast<double>(ya[i]) - yb[i]);
      d.max_abs = std::max(d.max_abs, delta);
      sum += delta;
    }
    d.elements += ya.size();
  }
  d.mean_abs = d.elements ? sum / static_cast<double>(d.elements) : 0.0;
  return d;
}

}  // namespace lrfact::cli
