#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cryptext {

// Dense row-major matrix of doubles. Just enough for the feature tables
// and network parameters used here.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(size_t i, size_t j) { return data[i * cols + j]; }
  double at(size_t i, size_t j) const { return data[i * cols + j]; }

  std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

}  // namespace cryptext
