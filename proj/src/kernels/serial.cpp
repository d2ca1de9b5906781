#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vqalign/kernels.hpp"

namespace vqalign::kernels {

bool negligible_spread(double sum_sq_dev, std::span<const double> values) {
  double max_abs = 0.0;
  for (double x : values) max_abs = std::max(max_abs, std::abs(x));
  const double sd = std::sqrt(sum_sq_dev / static_cast<double>(values.size()));
  return sd <= 1e-12 * max_abs;  // also true for an all-zero sample
}

namespace serial {

Matrix gramian(const Matrix& x) {
  Matrix g(x.rows, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.rows; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) s += x(i, k) * x(j, k);
      g(i, j) = s;
    }
  }
  return g;
}

Matrix row_correlations(const Matrix& v) {
  const std::size_t m = v.rows, n = v.cols;
  Matrix out(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) {
        out(a, b) = 1.0;
        continue;
      }
      double ma = 0.0, mb = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        ma += v(a, k);
        mb += v(b, k);
      }
      ma /= static_cast<double>(n);
      mb /= static_cast<double>(n);
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double da = v(a, k) - ma, db = v(b, k) - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
      }
      if (negligible_spread(saa, v.row(a)) || negligible_spread(sbb, v.row(b))) {
        out(a, b) = std::numeric_limits<double>::quiet_NaN();
      } else {
        out(a, b) = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<double> column_medians(const Matrix& x) {
  if (x.rows == 0) throw std::invalid_argument("median of zero rows");
  std::vector<double> out(x.cols);
  std::vector<double> col(x.rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t r = 0; r < x.rows; ++r) col[r] = x(r, c);
    std::sort(col.begin(), col.end());
    const std::size_t mid = x.rows / 2;
    out[c] = (x.rows % 2 == 1) ? col[mid] : 0.5 * (col[mid - 1] + col[mid]);
  }
  return out;
}

std::vector<double> row_distances(const Matrix& x, std::span<const double> point) {
  if (point.size() != x.cols) throw std::invalid_argument("dimension mismatch");
  std::vector<double> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = x(r, c) - point[c];
      s += d * d;
    }
    out[r] = std::sqrt(s);
  }
  return out;
}

}  // namespace serial
}  // namespace vqalign::kernels
