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

#include <cmath>

#include "lrfact/error.hpp"
#include "lrfact/factorizer.hpp"

namespace lrfact {

linalg::FactorPair split_sigma(const linalg::SvdResult& svd, SigmaSplit mode) {
  const std::size_t m = svd.u.rows(), n = svd.v.rows(), r = svd.rank();
  linalg::FactorPair out{Matrix(m, r), Matrix(r, n)};
  for (std::size_t k = 0; k < r; ++k) {
    const double s = svd.s[k];
    const double left = mode == SigmaSplit::balanced ? std::sqrt(s) : 1.0;
    const double right = mode == SigmaSplit::balanced ? std::sqrt(s) : s;
    for (std::size_t i = 0; i < m; ++i) out.a(i, k) = static_cast<float>(svd.u(i, k) * left);
    for (std::size_t j = 0; j < n; ++j) out.b(k, j) = static_cast<float>(svd.v(j, k) * right);
  }
  return out;
}

Matrix rearrange_conv_weight(const Tensor& weight) {
  if (weight.rank() < 3 || weight.rank() > 5) {
    throw ShapeError("conv weight must be [C_in, C_out, K...] with 1-3 kernel axes, got " +
                     shape_to_string(weight.shape()));
  }
  const std::size_t cin = weight.dim(0), cout = weight.dim(1);
  const std::size_t ksize = weight.size() / (cin * cout);
  Matrix out(cin * ksize, cout);
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t k = 0; k < ksize; ++k)
        out(c * ksize + k, o) = weight[(c * cout + o) * ksize + k];
  return out;
}

ConvFactors tensorize_conv_factors(const Matrix& a, const Matrix& b, std::size_t in_channels,
                                   const Shape& kernel) {
  if (kernel.empty() || kernel.size() > 3)
    throw ShapeError("kernel must have 1 to 3 axes, got " + shape_to_string(kernel));
  const std::size_t ksize = shape_numel(kernel);
  const std::size_t r = a.cols(), cout = b.cols();
  if (a.rows() != in_channels * ksize || b.rows() != r) {
    throw ShapeError("conv factors " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                     " do not match C_in=" + std::to_string(in_channels) + " kernel " +
                     shape_to_string(kernel));
  }
  Shape enc_shape{in_channels, r};
  enc_shape.insert(enc_shape.end(), kernel.begin(), kernel.end());
  Shape dec_shape{r, cout};
  dec_shape.resize(2 + kernel.size(), 1);

  ConvFactors out{Tensor(enc_shape), Tensor(dec_shape)};
  for (std::size_t c = 0; c < in_channels; ++c)
    for (std::size_t p = 0; p < r; ++p)
      for (std::size_t k = 0; k < ksize; ++k)
        out.encoder[(c * r + p) * ksize + k] = a(c * ksize + k, p);
  std::copy(b.data().begin(), b.data().end(), out.decoder.data().begin());
  return out;
}

linalg::FactorPair solve_factors(const Matrix& w, std::size_t rank, const FactorizeConfig& config,
                                 std::uint64_t seed) {
  switch (config.solver) {
    case Solver::random:
      return linalg::random_factors(w.rows(), w.cols(), rank, seed);
    case Solver::svd:
      return split_sigma(linalg::truncated_svd(w, rank), config.sigma);
    case Solver::snmf: {
      linalg::SnmfOptions opts = config.snmf_options;
      opts.seed = seed;
      linalg::SnmfResult res = linalg::snmf(w, rank, opts);
      return {std::move(res.a), std::move(res.b)};
    }
  }
  throw ValueError("unknown solver");
}

}  // namespace lrfact
