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
#include <span>
#include <vector>

namespace lrfact::linalg::detail {

// Thin SVD in double precision. `u` is m x k and `v` is n x k, both
// column-major, k = min(m, n). Singular values are sorted nonincreasing and
// the largest-magnitude entry of each u column is positive.
struct DenseSvd {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> v;

  double u_at(std::size_t row, std::size_t col) const { return u[col * m + row]; }
  double v_at(std::size_t row, std::size_t col) const { return v[col * n + row]; }
};

DenseSvd dense_svd(std::span<const double> row_major, std::size_t m, std::size_t n);

// Moore-Penrose pseudoinverse of a square symmetric matrix (row-major).
std::vector<double> symmetric_pinv(std::span<const double> row_major, std::size_t n);

}  // namespace lrfact::linalg::detail
