#pragma once

#include <cstddef>

// Dense kernels used by the GNN. W is row-major rows x cols.
namespace bison::kernels {

enum class Backend { scalar, avx2 };

bool avx2_supported();
Backend active_backend();
// Throws std::invalid_argument if the backend is not supported here.
void set_backend(Backend b);
const char* backend_name(Backend b);

// y = W x
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
// gx += W^T gy
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* gy,
                  double* gx);
// dW += gy x^T
void outer_acc(double* dW, size_t rows, size_t cols, const double* gy,
               const double* x);

namespace scalar {
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* gy,
                  double* gx);
void outer_acc(double* dW, size_t rows, size_t cols, const double* gy,
               const double* x);
}  // namespace scalar

// Only callable when avx2_supported().
namespace avx2 {
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* gy,
                  double* gx);
void outer_acc(double* dW, size_t rows, size_t cols, const double* gy,
               const double* x);
}  // namespace avx2

}  // namespace bison::kernels
