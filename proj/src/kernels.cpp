#include "bison/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define BISON_X86 1
#endif

namespace bison::kernels {

namespace scalar {

void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    double s = 0;
    for (size_t c = 0; c < cols; ++c) s += w[c] * x[c];
    y[r] = s;
  }
}

void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* gy,
                  double* gx) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0) continue;
    const double* w = W + r * cols;
    for (size_t c = 0; c < cols; ++c) gx[c] += w[c] * g;
  }
}

void outer_acc(double* dW, size_t rows, size_t cols, const double* gy,
               const double* x) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0) continue;
    double* d = dW + r * cols;
    for (size_t c = 0; c < cols; ++c) d[c] += g * x[c];
  }
}

}  // namespace scalar

#ifdef BISON_X86

namespace avx2 {

__attribute__((target("avx2,fma"))) void matvec(const double* W, size_t rows,
                                                size_t cols, const double* x,
                                                double* y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    __m256d acc = _mm256_setzero_pd();
    size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + c), _mm256_loadu_pd(x + c), acc);
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    double s = _mm_cvtsd_f64(lo);
    for (; c < cols; ++c) s += w[c] * x[c];
    y[r] = s;
  }
}

__attribute__((target("avx2,fma"))) void matvec_t_acc(const double* W, size_t rows,
                                                      size_t cols, const double* gy,
                                                      double* gx) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0) continue;
    const double* w = W + r * cols;
    const __m256d gv = _mm256_set1_pd(g);
    size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(gx + c, _mm256_fmadd_pd(_mm256_loadu_pd(w + c), gv,
                                               _mm256_loadu_pd(gx + c)));
    for (; c < cols; ++c) gx[c] += w[c] * g;
  }
}

__attribute__((target("avx2,fma"))) void outer_acc(double* dW, size_t rows,
                                                   size_t cols, const double* gy,
                                                   const double* x) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0) continue;
    double* d = dW + r * cols;
    const __m256d gv = _mm256_set1_pd(g);
    size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      _mm256_storeu_pd(d + c, _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + c),
                                              _mm256_loadu_pd(d + c)));
    for (; c < cols; ++c) d[c] += g * x[c];
  }
}

}  // namespace avx2

bool avx2_supported() {
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
}

#else

namespace avx2 {
void matvec(const double*, size_t, size_t, const double*, double*) {
  throw std::logic_error("avx2 kernels unavailable");
}
void matvec_t_acc(const double*, size_t, size_t, const double*, double*) {
  throw std::logic_error("avx2 kernels unavailable");
}
void outer_acc(double*, size_t, size_t, const double*, const double*) {
  throw std::logic_error("avx2 kernels unavailable");
}
}  // namespace avx2

bool avx2_supported() { return false; }

#endif

namespace {

struct Table {
  Backend backend;
  decltype(&scalar::matvec) mv;
  decltype(&scalar::matvec_t_acc) mvt;
  decltype(&scalar::outer_acc) outer;
};

Table make(Backend b) {
  if (b == Backend::avx2) return {b, avx2::matvec, avx2::matvec_t_acc, avx2::outer_acc};
  return {b, scalar::matvec, scalar::matvec_t_acc, scalar::outer_acc};
}

Table& table() {
  // BISON_SIMD=scalar forces the reference kernels.
  static Table t = [] {
    const char* env = std::getenv("BISON_SIMD");
    const bool force_scalar = env && std::strcmp(env, "scalar") == 0;
    return make(!force_scalar && avx2_supported() ? Backend::avx2 : Backend::scalar);
  }();
  return t;
}

}  // namespace

Backend active_backend() { return table().backend; }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw std::invalid_argument("avx2 backend not supported on this CPU");
  table() = make(b);
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  table().mv(W, rows, cols, x, y);
}

void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* gy,
                  double* gx) {
  table().mvt(W, rows, cols, gy, gx);
}

void outer_acc(double* dW, size_t rows, size_t cols, const double* gy,
               const double* x) {
  table().outer(dW, rows, cols, gy, x);
}

}  // namespace bison::kernels
