#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vqalign/kernels.hpp"

namespace vqalign::kernels::parallel {

int max_threads() { return omp_get_max_threads(); }

Matrix gramian(const Matrix& x) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
  const std::size_t d = x.cols;
  Matrix g(x.rows, x.rows);
  // Upper triangle only, mirrored afterwards; rows get uneven work so use a
  // dynamic schedule.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* xi = x.data.data() + static_cast<std::size_t>(i) * d;
    for (std::ptrdiff_t j = i; j < n; ++j) {
      const double* xj = x.data.data() + static_cast<std::size_t>(j) * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += xi[k] * xj[k];
      g(i, j) = s;
      g(j, i) = s;
    }
  }
  return g;
}

Matrix row_correlations(const Matrix& v) {
  const std::size_t m = v.rows, n = v.cols;
  // Center each row and scale it to unit length; correlations are then plain
  // dot products. Zero-variance rows are flagged and produce NaN.
  Matrix z(m, n);
  std::vector<char> degenerate(m, 0);
#pragma omp parallel for
  for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(m); ++a) {
    const auto r = v.row(a);
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    auto zr = z.row(a);
    for (std::size_t k = 0; k < n; ++k) {
      zr[k] = r[k] - mean;
      ss += zr[k] * zr[k];
    }
    if (negligible_spread(ss, r)) {
      degenerate[a] = 1;
      continue;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : zr) x *= inv;
  }

  Matrix out(m, m);
  const double nan = std::numeric_limits<double>::quiet_NaN();
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(m); ++a) {
    out(a, a) = 1.0;
    for (std::size_t b = static_cast<std::size_t>(a) + 1; b < m; ++b) {
      double r = nan;
      if (!degenerate[a] && !degenerate[b]) {
        const double* za = z.data.data() + static_cast<std::size_t>(a) * n;
        const double* zb = z.data.data() + b * n;
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += za[k] * zb[k];
        r = std::clamp(s, -1.0, 1.0);
      }
      out(a, b) = r;
      out(b, a) = r;
    }
  }
  return out;
}

std::vector<double> column_medians(const Matrix& x) {
  if (x.rows == 0) throw std::invalid_argument("median of zero rows");
  const std::size_t rows = x.rows;
  std::vector<double> out(x.cols);
#pragma omp parallel
  {
    std::vector<double> col(rows);
#pragma omp for
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(x.cols); ++c) {
      for (std::size_t r = 0; r < rows; ++r) col[r] = x(r, c);
      const std::size_t mid = rows / 2;
      std::nth_element(col.begin(), col.begin() + mid, col.end());
      double m = col[mid];
      if (rows % 2 == 0) {
        const double lower = *std::max_element(col.begin(), col.begin() + mid);
        m = 0.5 * (lower + m);
      }
      out[c] = m;
    }
  }
  return out;
}

std::vector<double> row_distances(const Matrix& x, std::span<const double> point) {
  if (point.size() != x.cols) throw std::invalid_argument("dimension mismatch");
  std::vector<double> out(x.rows);
#pragma omp parallel for
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(x.rows); ++r) {
    const auto row = x.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = row[c] - point[c];
      s += d * d;
    }
    out[r] = std::sqrt(s);
  }
  return out;
}

}  // namespace vqalign::kernels::parallel
