#pragma once

// Dense numeric kernels behind the analysis stages.
//
// Each kernel exists twice: `serial::` is the straightforward reference used by
// tests as ground truth, `parallel::` is the OpenMP version the pipeline runs.
// Both take row-major matrices and must agree to 1e-12.

#include <cstddef>
#include <span>
#include <vector>

namespace vqalign::kernels {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// True when a sample's standard deviation is indistinguishable from rounding
// noise (<= 1e-12 relative to its magnitude). Such samples make Pearson undefined.
bool negligible_spread(double sum_sq_dev, std::span<const double> values);

namespace serial {

// G = X X^T for an n x d matrix X.
Matrix gramian(const Matrix& x);

// Pearson correlation between every pair of rows. Pairs where either row has
// zero variance are NaN; the diagonal is 1.
Matrix row_correlations(const Matrix& v);

// Componentwise median of the rows (mean of the middle two for even counts).
std::vector<double> column_medians(const Matrix& x);

// Euclidean distance from each row of x to `point`.
std::vector<double> row_distances(const Matrix& x, std::span<const double> point);

}  // namespace serial

namespace parallel {

Matrix gramian(const Matrix& x);
Matrix row_correlations(const Matrix& v);
std::vector<double> column_medians(const Matrix& x);
std::vector<double> row_distances(const Matrix& x, std::span<const double> point);

// Threads OpenMP will use for the kernels above (1 when built without OpenMP).
int max_threads();

}  // namespace parallel

}  // namespace vqalign::kernels
