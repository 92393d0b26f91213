#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sico/errors.hpp"

namespace sico {

// Dense row-major double matrix. Carrier for batches, weights and
// probability tables; no linear-algebra library behind it.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    return values[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }

  double* row(std::size_t r) { return values.data() + r * cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }

  bool empty() const { return rows == 0 || cols == 0; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool all_finite() const {
    for (double x : values) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  // Copy of the given rows, in the given order.
  Matrix gather_rows(const std::vector<std::size_t>& indices) const {
    Matrix out(indices.size(), cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const double* src = row(indices[i]);
      double* dst = out.row(i);
      for (std::size_t c = 0; c < cols; ++c) dst[c] = src[c];
    }
    return out;
  }
};

// C = A * B, cache-friendly i-k-j loop.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw InputError("matmul: inner dimensions differ");
  }
  Matrix c(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

}  // namespace sico
