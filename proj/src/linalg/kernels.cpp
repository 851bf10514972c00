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
#include <cmath>
#include <random>
#include <string>

#include "lrfact/error.hpp"
#include "lrfact/linalg.hpp"

namespace lrfact::linalg {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> acc(n);
  Matrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const auto brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) = static_cast<float>(acc[j]);
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (float v : m.data()) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

double frobenius_error(const Matrix& w, const Matrix& a, const Matrix& b) {
  if (a.rows() != w.rows() || a.cols() != b.rows() || b.cols() != w.cols()) {
    throw ShapeError("frobenius_error: factors " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + " do not compose to " + std::to_string(w.rows()) +
                     "x" + std::to_string(w.cols()));
  }
  const std::size_t m = w.rows(), r = a.cols(), n = w.cols();
  double residual = 0.0, reference = 0.0;
  std::vector<double> row(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t p = 0; p < r; ++p) {
      const double aip = a(i, p);
      const auto brow = b.row(p);
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w(i, j);
      const double d = wij - row[j];
      residual += d * d;
      reference += wij * wij;
    }
  }
  if (reference == 0.0) return std::sqrt(residual);
  return std::sqrt(residual / reference);
}

FactorPair random_factors(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed) {
  if (rank < 1) throw RankError("random_factors: rank must be >= 1");
  std::mt19937_64 gen(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rank));
  auto draw = [&]() {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    return static_cast<float>((2.0 * unit - 1.0) * bound);
  };
  FactorPair out{Matrix(m, rank), Matrix(rank, n)};
  for (float& v : out.a.data()) v = draw();
  for (float& v : out.b.data()) v = draw();
  return out;
}

}  // namespace lrfact::linalg
