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

// Golub-Kahan bidiagonalization followed by Golub-Reinsch implicit-shift QR
// on the bidiagonal. All working storage is column-major so that the Givens
// rotations, which dominate the cost, sweep contiguous memory.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dense_svd.hpp"
#include "lrfact/error.hpp"
#include "lrfact/linalg.hpp"

namespace lrfact::linalg {
namespace detail {
namespace {

constexpr int kMaxQrIterations = 75;

inline void rotate(double* x, double* y, std::size_t len, double c, double s) {
  for (std::size_t i = 0; i < len; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = xi * c + yi * s;
    y[i] = yi * c - xi * s;
  }
}

// In/out: `a` is m x n column-major with m >= n; overwritten by U.
// Outputs unsorted singular values in `w` and V (n x n column-major) in `v`.
void golub_reinsch(std::vector<double>& a, std::size_t m, std::size_t n, std::vector<double>& w,
                   std::vector<double>& v) {
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[j * m + i]; };
  auto V = [&](std::size_t i, std::size_t j) -> double& { return v[j * n + i]; };

  w.assign(n, 0.0);
  v.assign(n * n, 0.0);
  std::vector<double> rv1(n, 0.0);
  std::vector<double> scratch(std::max(m, n), 0.0);

  double g = 0.0, scale = 0.0, anorm = 0.0;
  std::size_t l = 0;

  // Householder reduction to upper bidiagonal form.
  for (std::size_t i = 0; i < n; ++i) {
    l = i + 1;
    rv1[i] = scale * g;
    g = scale = 0.0;
    double s = 0.0;
    double* coli = &a[i * m];
    for (std::size_t k = i; k < m; ++k) scale += std::fabs(coli[k]);
    if (scale != 0.0) {
      for (std::size_t k = i; k < m; ++k) {
        coli[k] /= scale;
        s += coli[k] * coli[k];
      }
      const double f = coli[i];
      g = -std::copysign(std::sqrt(s), f);
      const double h = f * g - s;
      coli[i] = f - g;
      for (std::size_t j = l; j < n; ++j) {
        double* colj = &a[j * m];
        double dot = 0.0;
        for (std::size_t k = i; k < m; ++k) dot += coli[k] * colj[k];
        const double fj = dot / h;
        for (std::size_t k = i; k < m; ++k) colj[k] += fj * coli[k];
      }
      for (std::size_t k = i; k < m; ++k) coli[k] *= scale;
    }
    w[i] = scale * g;

    g = scale = s = 0.0;
    if (i + 1 != n) {
      for (std::size_t k = l; k < n; ++k) scale += std::fabs(A(i, k));
      if (scale != 0.0) {
        for (std::size_t k = l; k < n; ++k) {
          A(i, k) /= scale;
          s += A(i, k) * A(i, k);
        }
        const double f = A(i, l);
        g = -std::copysign(std::sqrt(s), f);
        const double h = f * g - s;
        A(i, l) = f - g;
        for (std::size_t k = l; k < n; ++k) rv1[k] = A(i, k) / h;
        // Row updates for rows l..m-1, reordered column-by-column.
        std::fill(scratch.begin() + l, scratch.begin() + m, 0.0);
        for (std::size_t k = l; k < n; ++k) {
          const double aik = A(i, k);
          const double* colk = &a[k * m];
          for (std::size_t j = l; j < m; ++j) scratch[j] += colk[j] * aik;
        }
        for (std::size_t k = l; k < n; ++k) {
          const double r = rv1[k];
          double* colk = &a[k * m];
          for (std::size_t j = l; j < m; ++j) colk[j] += scratch[j] * r;
        }
        for (std::size_t k = l; k < n; ++k) A(i, k) *= scale;
      }
    }
    anorm = std::max(anorm, std::fabs(w[i]) + std::fabs(rv1[i]));
  }

  // Accumulate right-hand transformations.
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t i = ii;
    if (i + 1 < n) {
      if (g != 0.0) {
        for (std::size_t j = l; j < n; ++j) scratch[j] = A(i, j);
        for (std::size_t j = l; j < n; ++j) V(j, i) = (scratch[j] / scratch[l]) / g;
        const double* vi = &v[i * n];
        for (std::size_t j = l; j < n; ++j) {
          double* vj = &v[j * n];
          double dot = 0.0;
          for (std::size_t k = l; k < n; ++k) dot += scratch[k] * vj[k];
          for (std::size_t k = l; k < n; ++k) vj[k] += dot * vi[k];
        }
      }
      for (std::size_t j = l; j < n; ++j) V(i, j) = V(j, i) = 0.0;
    }
    V(i, i) = 1.0;
    g = rv1[i];
    l = i;
  }

  // Accumulate left-hand transformations.
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t i = ii;
    l = i + 1;
    g = w[i];
    for (std::size_t j = l; j < n; ++j) A(i, j) = 0.0;
    double* coli = &a[i * m];
    if (g != 0.0) {
      g = 1.0 / g;
      for (std::size_t j = l; j < n; ++j) {
        double* colj = &a[j * m];
        double dot = 0.0;
        for (std::size_t k = l; k < m; ++k) dot += coli[k] * colj[k];
        const double f = (dot / coli[i]) * g;
        for (std::size_t k = i; k < m; ++k) colj[k] += f * coli[k];
      }
      for (std::size_t j = i; j < m; ++j) coli[j] *= g;
    } else {
      for (std::size_t j = i; j < m; ++j) coli[j] = 0.0;
    }
    coli[i] += 1.0;
  }

  // Diagonalize the bidiagonal form.
  const double tiny = std::numeric_limits<double>::epsilon() * anorm;
  for (std::size_t kk = n; kk-- > 0;) {
    const std::size_t k = kk;
    for (int its = 0;; ++its) {
      bool cancel = true;
      std::size_t lo = k;
      for (;;) {
        if (lo == 0 || std::fabs(rv1[lo]) <= tiny) {
          cancel = false;
          break;
        }
        if (std::fabs(w[lo - 1]) <= tiny) break;
        --lo;
      }
      if (cancel) {
        // w[lo-1] is negligible: chase rv1[lo] out of the matrix.
        const std::size_t nm = lo - 1;
        double c = 0.0, s = 1.0;
        for (std::size_t i = lo; i <= k; ++i) {
          const double f = s * rv1[i];
          rv1[i] = c * rv1[i];
          if (std::fabs(f) <= tiny) break;
          const double gi = w[i];
          double h = std::hypot(f, gi);
          w[i] = h;
          h = 1.0 / h;
          c = gi * h;
          s = -f * h;
          rotate(&a[nm * m], &a[i * m], m, c, s);
        }
      }
      const double z = w[k];
      if (lo == k) {
        if (z < 0.0) {
          w[k] = -z;
          for (std::size_t j = 0; j < n; ++j) V(j, k) = -V(j, k);
        }
        break;
      }
      if (its == kMaxQrIterations) {
        throw ValueError("SVD failed to converge after " + std::to_string(kMaxQrIterations) +
                         " QR iterations");
      }

      // Wilkinson-style shift from the trailing 2x2 minor.
      double x = w[lo];
      const std::size_t nm = k - 1;
      double y = w[nm];
      double gg = rv1[nm];
      double h = rv1[k];
      double f = ((y - z) * (y + z) + (gg - h) * (gg + h)) / (2.0 * h * y);
      gg = std::hypot(f, 1.0);
      f = ((x - z) * (x + z) + h * ((y / (f + std::copysign(gg, f))) - h)) / x;

      double c = 1.0, s = 1.0;
      for (std::size_t j = lo; j <= nm; ++j) {
        const std::size_t i = j + 1;
        gg = rv1[i];
        y = w[i];
        h = s * gg;
        gg = c * gg;
        double zz = std::hypot(f, h);
        rv1[j] = zz;
        c = f / zz;
        s = h / zz;
        f = x * c + gg * s;
        gg = gg * c - x * s;
        h = y * s;
        y *= c;
        rotate(&v[j * n], &v[i * n], n, c, s);
        zz = std::hypot(f, h);
        w[j] = zz;
        if (zz != 0.0) {
          zz = 1.0 / zz;
          c = f * zz;
          s = h * zz;
        }
        f = c * gg + s * y;
        x = c * y - s * gg;
        rotate(&a[j * m], &a[i * m], m, c, s);
      }
      rv1[lo] = 0.0;
      rv1[k] = f;
      w[k] = x;
    }
  }
}

}  // namespace

DenseSvd dense_svd(std::span<const double> row_major, std::size_t m, std::size_t n) {
  if (row_major.size() != m * n) throw ShapeError("svd: data length does not match shape");
  DenseSvd out;
  out.m = m;
  out.n = n;
  out.k = std::min(m, n);
  if (out.k == 0) return out;

  // Work on a tall matrix: W itself when m >= n, otherwise W^T. The
  // column-major copy of W^T is W's row-major data verbatim.
  const bool tall = m >= n;
  const std::size_t rows = tall ? m : n;
  const std::size_t cols = tall ? n : m;
  std::vector<double> work(rows * cols);
  if (tall) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) work[j * m + i] = row_major[i * n + j];
  } else {
    std::copy(row_major.begin(), row_major.end(), work.begin());
  }
  std::vector<double> w, vmat;
  golub_reinsch(work, rows, cols, w, vmat);

  // For a wide input the roles of the left and right factors swap.
  const std::vector<double>& left = tall ? work : vmat;
  const std::vector<double>& right = tall ? vmat : work;

  std::vector<std::size_t> order(out.k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return w[p] > w[q]; });

  out.u.resize(m * out.k);
  out.v.resize(n * out.k);
  out.s.resize(out.k);
  for (std::size_t c = 0; c < out.k; ++c) {
    const std::size_t src = order[c];
    const double* ucol = &left[src * m];
    const double* vcol = &right[src * n];
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (std::fabs(ucol[i]) > std::fabs(ucol[argmax])) argmax = i;
    const double sign = ucol[argmax] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i) out.u[c * m + i] = sign * ucol[i];
    for (std::size_t i = 0; i < n; ++i) out.v[c * n + i] = sign * vcol[i];
    out.s[c] = w[src];
  }
  return out;
}

std::vector<double> symmetric_pinv(std::span<const double> row_major, std::size_t n) {
  const DenseSvd svd = dense_svd(row_major, n, n);
  std::vector<double> out(n * n, 0.0);
  if (n == 0) return out;
  const double cutoff = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * svd.s[0];
  for (std::size_t c = 0; c < n; ++c) {
    if (!(svd.s[c] > cutoff)) continue;
    const double inv = 1.0 / svd.s[c];
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = svd.v_at(i, c) * inv;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += vi * svd.u_at(j, c);
    }
  }
  return out;
}

}  // namespace detail

SvdResult truncated_svd(const Matrix& w, std::size_t rank) {
  const std::size_t m = w.rows(), n = w.cols();
  if (rank < 1 || rank > std::min(m, n)) {
    throw RankError("svd rank " + std::to_string(rank) + " outside [1, " +
                    std::to_string(std::min(m, n)) + "]");
  }
  if (!w.all_finite()) throw ValueError("svd input contains non-finite values");

  std::vector<double> data(w.data().begin(), w.data().end());
  const detail::DenseSvd full = detail::dense_svd(data, m, n);

  SvdResult out{Matrix(m, rank), std::vector<float>(rank), Matrix(n, rank)};
  for (std::size_t c = 0; c < rank; ++c) {
    out.s[c] = static_cast<float>(full.s[c]);
    for (std::size_t i = 0; i < m; ++i) out.u(i, c) = static_cast<float>(full.u_at(i, c));
    for (std::size_t i = 0; i < n; ++i) out.v(i, c) = static_cast<float>(full.v_at(i, c));
  }
  return out;
}

}  // namespace lrfact::linalg
