#include "seqmatch/kernels.hpp"

namespace seqmatch::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_scalar(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = bias ? bias[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

void matvec_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                         const double* v, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double vr = v[r];
    if (vr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * vr;
  }
}

void outer_acc_scalar(double* w, std::size_t rows, std::size_t cols,
                      const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w + r * cols;
    double ur = u[r];
    if (ur == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar",         dot_scalar,  matvec_scalar,
                       matvec_t_acc_scalar, outer_acc_scalar, axpy_scalar,
                       scale_scalar};
  return ops;
}

}  // namespace seqmatch::kernels
