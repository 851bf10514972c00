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

// Semi-nonnegative matrix factorization w ~= a b, b >= 0.
//
// Alternating scheme: the unconstrained factor is the exact least-squares
// solution a = w b^T (b b^T)^+, and the nonnegative factor takes the
// multiplicative step
//
//   b <- b * sqrt( ([a^T w]+ + [a^T a]- b) / ([a^T w]- + [a^T a]+ b) )
//
// with M+ = (|M| + M) / 2 and M- = (|M| - M) / 2. Both half-steps are
// non-increasing in ||w - a b||_F^2.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dense_svd.hpp"
#include "lrfact/error.hpp"
#include "lrfact/linalg.hpp"

namespace lrfact::linalg {
namespace {

constexpr double kInitOffset = 1e-4;

// Row-major double matrix, only as much as the solver needs.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Dense() = default;
  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

// x * y^T
Dense mul_bt(const Dense& x, const Dense& y) {
  Dense out(x.rows, y.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < y.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) s += x(i, k) * y(j, k);
      out(i, j) = s;
    }
  return out;
}

// x^T * y
Dense mul_at(const Dense& x, const Dense& y) {
  Dense out(x.cols, y.cols);
  for (std::size_t k = 0; k < x.rows; ++k)
    for (std::size_t i = 0; i < x.cols; ++i) {
      const double xki = x(k, i);
      if (xki == 0.0) continue;
      for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += xki * y(k, j);
    }
  return out;
}

Dense mul(const Dense& x, const Dense& y) {
  Dense out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xik = x(i, k);
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += xik * y(k, j);
    }
  return out;
}

double residual_sq(const Dense& w, const Dense& a, const Dense& b) {
  const Dense ab = mul(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < w.v.size(); ++i) {
    const double d = w.v[i] - ab.v[i];
    s += d * d;
  }
  return s;
}

Dense solve_unconstrained(const Dense& w, const Dense& b) {
  const Dense gram = mul_bt(b, b);
  Dense pinv(b.rows, b.rows);
  pinv.v = detail::symmetric_pinv(gram.v, b.rows);
  return mul(mul_bt(w, b), pinv);
}

void update_nonnegative(const Dense& w, const Dense& a, Dense& b) {
  const Dense atw = mul_at(a, w);  // r x n
  const Dense ata = mul_at(a, a);  // r x r
  const std::size_t r = b.rows, n = b.cols;
  Dense next(r, n);
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = atw(k, j);
      double num = (std::fabs(p) + p) * 0.5;
      double den = (std::fabs(p) - p) * 0.5;
      for (std::size_t l = 0; l < r; ++l) {
        const double q = ata(k, l);
        num += (std::fabs(q) - q) * 0.5 * b(l, j);
        den += (std::fabs(q) + q) * 0.5 * b(l, j);
      }
      // den == 0 only when b(k, j) == 0 or column k of a vanishes; the
      // entry then stays put.
      next(k, j) = den > 0.0 ? b(k, j) * std::sqrt(num / den) : b(k, j);
    }
  }
  b = std::move(next);
}

}  // namespace

SnmfResult snmf(const Matrix& w, std::size_t rank, const SnmfOptions& opts) {
  const std::size_t m = w.rows(), n = w.cols();
  if (rank < 1 || rank > std::min(m, n)) {
    throw RankError("snmf rank " + std::to_string(rank) + " outside [1, " +
                    std::to_string(std::min(m, n)) + "]");
  }
  if (opts.max_iterations < 1) throw ValueError("snmf max_iterations must be >= 1");
  if (!(opts.rel_tolerance >= 0.0)) throw ValueError("snmf rel_tolerance must be >= 0");
  if (!w.all_finite()) throw ValueError("snmf input contains non-finite values");

  Dense wd(m, n);
  std::copy(w.data().begin(), w.data().end(), wd.v.begin());

  // b starts from |sqrt(s) v^T| of the leading singular triplets, lifted off
  // zero by a seeded offset in [1e-4, 2e-4).
  const detail::DenseSvd svd = detail::dense_svd(wd.v, m, n);
  std::mt19937_64 gen(opts.seed);
  Dense b(rank, n);
  for (std::size_t k = 0; k < rank; ++k) {
    const double root = std::sqrt(svd.s[k]);
    for (std::size_t j = 0; j < n; ++j) {
      const double jitter = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      b(k, j) = std::fabs(root * svd.v_at(j, k)) + kInitOffset * (1.0 + jitter);
    }
  }

  SnmfResult out;
  Dense a;
  for (int it = 0; it < opts.max_iterations; ++it) {
    a = solve_unconstrained(wd, b);
    const double before_b = residual_sq(wd, a, b);
    if (before_b == 0.0) {
      out.objective.push_back(0.0);
      out.iterations = it + 1;
      break;
    }
    update_nonnegative(wd, a, b);
    const double f = residual_sq(wd, a, b);
    out.objective.push_back(f);
    out.iterations = it + 1;
    if (f == 0.0) break;
    if (out.objective.size() >= 2) {
      const double prev = out.objective[out.objective.size() - 2];
      if (prev - f < opts.rel_tolerance * prev) break;
    }
  }

  out.a = Matrix(m, rank);
  out.b = Matrix(rank, n);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.a.data()[i] = static_cast<float>(a.v[i]);
  for (std::size_t i = 0; i < b.v.size(); ++i) out.b.data()[i] = static_cast<float>(b.v[i]);
  return out;
}

}  // namespace lrfact::linalg
