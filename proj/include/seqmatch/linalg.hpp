#pragma once

#include <cstddef>
#include <vector>

namespace seqmatch {

using Vector = std::vector<double>;

// Row-major dense matrix, 64-bit entries. All training math stays in double
// so finite-difference checks are meaningful at 1e-4 relative tolerance.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix& other) const = default;
};

}  // namespace seqmatch
