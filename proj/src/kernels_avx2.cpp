#include "seqmatch/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace seqmatch::kernels {

namespace {

inline double hsum256(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum256(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void matvec_avx2(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = dot_avx2(w + r * cols, x, cols);
    out[r] = bias ? acc + bias[r] : acc;
  }
}

void matvec_t_acc_avx2(const double* w, std::size_t rows, std::size_t cols,
                       const double* v, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double vr = v[r];
    if (vr == 0.0) continue;
    __m256d vv = _mm256_set1_pd(vr);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_loadu_pd(out + c);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + c), vv, acc);
      _mm256_storeu_pd(out + c, acc);
    }
    for (; c < cols; ++c) out[c] += row[c] * vr;
  }
}

void outer_acc_avx2(double* w, std::size_t rows, std::size_t cols,
                    const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w + r * cols;
    double ur = u[r];
    if (ur == 0.0) continue;
    __m256d uu = _mm256_set1_pd(ur);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d acc = _mm256_loadu_pd(row + c);
      acc = _mm256_fmadd_pd(uu, _mm256_loadu_pd(v + c), acc);
      _mm256_storeu_pd(row + c, acc);
    }
    for (; c < cols; ++c) row[c] += ur * v[c];
  }
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  __m256d aa = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(aa, _mm256_loadu_pd(x + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(std::size_t n, double a, double* x) {
  __m256d aa = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(aa, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

const Ops kAvx2Ops{"avx2",         dot_avx2,  matvec_avx2, matvec_t_acc_avx2,
                   outer_acc_avx2, axpy_avx2, scale_avx2};

}  // namespace

const Ops* avx2_ops_impl() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &kAvx2Ops;
  }
  return nullptr;
}

}  // namespace seqmatch::kernels

#else

namespace seqmatch::kernels {
const Ops* avx2_ops_impl() { return nullptr; }
}  // namespace seqmatch::kernels

#endif
