#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uleen {

/// Dense row-major matrix of doubles. Small enough on purpose; this project
/// only ever needs row access and element indexing.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return values[r * cols + c]; }
  double at(size_t r, size_t c) const { return values[r * cols + c]; }

  std::span<const double> row(size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::span<double> row(size_t r) {
    return {values.data() + r * cols, cols};
  }
};

}  // namespace uleen
