#pragma once

#include <cstddef>
#include <string>

namespace seqmatch::kernels {

// Dense double-precision inner loops behind every forward/backward pass.
// Each entry has a scalar reference implementation and, on x86-64 hardware
// with AVX2+FMA, a vectorized variant selected once at startup. Variants are
// equivalence-tested against the scalar reference; summation order differs,
// so results agree to rounding, not bit-for-bit.
struct Ops {
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[r] = sum_c w[r*cols+c] * x[c] (+ bias[r] when bias != nullptr)
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* out);
  // out[c] += sum_r w[r*cols+c] * v[r]
  void (*matvec_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                       const double* v, double* out);
  // w[r*cols+c] += u[r] * v[c]
  void (*outer_acc)(double* w, std::size_t rows, std::size_t cols,
                    const double* u, const double* v);
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // x[i] *= a
  void (*scale)(std::size_t n, double a, double* x);
};

const Ops& scalar_ops();

// AVX2+FMA variant; nullptr when the build target or the running CPU does
// not support it.
const Ops* avx2_ops();

// The lane every caller goes through. Resolved once: honors the
// SEQMATCH_KERNELS environment variable ("scalar", "avx2", "auto"),
// otherwise picks the widest supported variant.
const Ops& active();

// Overrides the active lane by name ("scalar"/"avx2"/"auto"); throws
// ArgumentError for unknown names or unavailable variants.
void select(const std::string& name);

}  // namespace seqmatch::kernels
