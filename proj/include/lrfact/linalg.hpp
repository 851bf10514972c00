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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lrfact/tensor.hpp"

// Dense kernels and the factorization solvers. Every routine is a pure
// function of its arguments; solvers compute in double and store float.
namespace lrfact::linalg {

/// Truncated singular value decomposition w ~= u * diag(s) * v^T.
///
/// `u` is m x r and `v` is n x r, both with orthonormal columns. `s` is
/// nonincreasing and nonnegative. Each column of `u` has its
/// largest-magnitude entry positive, which makes the result unique whenever
/// the singular values are distinct.
struct SvdResult {
  Matrix u;
  std::vector<float> s;
  Matrix v;

  std::size_t rank() const noexcept { return s.size(); }
};

struct SnmfOptions {
  int max_iterations = 200;
  double rel_tolerance = 1e-5;
  std::uint64_t seed = 0;
};

/// Semi-nonnegative factors w ~= a * b with b >= 0 elementwise.
/// `objective` holds ||w - a b||_F^2 after each completed iteration.
struct SnmfResult {
  Matrix a;
  Matrix b;
  std::vector<double> objective;
  int iterations = 0;
};

struct FactorPair {
  Matrix a;  // m x r
  Matrix b;  // r x n
};

Matrix matmul(const Matrix& a, const Matrix& b);

SvdResult truncated_svd(const Matrix& w, std::size_t rank);

SnmfResult snmf(const Matrix& w, std::size_t rank, const SnmfOptions& opts = {});

/// Entries i.i.d. uniform on [-1/sqrt(r), 1/sqrt(r)]; `a` is drawn before `b`.
/// The stream is mt19937_64 mapped to doubles with 53-bit resolution, so
/// output is identical across platforms for a given seed.
FactorPair random_factors(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed);

/// ||w - a b||_F / ||w||_F. For a zero `w` the absolute norm ||a b||_F is
/// returned instead, which is 0 when the product is also zero.
double frobenius_error(const Matrix& w, const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);

}  // namespace lrfact::linalg
