#pragma once

#include <cstddef>

// Dense kernels behind the MLP. Every kernel exists twice: a straightforward
// serial version under `reference` used by the tests as an oracle, and the
// tuned OpenMP version the library calls. Each output element of the tuned
// gemm is produced by exactly one thread with a fixed summation order, so
// results do not depend on the thread count.
namespace ghrl::nn::kernels {

// C[m x n] = A[m x k] * B[k x n], or C += A * B when `accumulate` is set.
// All operands row-major and contiguous.
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate);

// dst[cols x rows] = src[rows x cols]^T
void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst);

// Adds `bias[n]` to every row of x[m x n].
void add_row_bias(std::size_t m, std::size_t n, const double* bias, double* x);

// sums[n] (+)= column sums of x[m x n].
void column_sums(std::size_t m, std::size_t n, const double* x, double* sums, bool accumulate);

void tanh_inplace(std::size_t count, double* x);

// grad[i] *= 1 - act[i]^2
void tanh_backward(std::size_t count, const double* act, double* grad);

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate);
void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst);
void add_row_bias(std::size_t m, std::size_t n, const double* bias, double* x);
void column_sums(std::size_t m, std::size_t n, const double* x, double* sums, bool accumulate);
void tanh_inplace(std::size_t count, double* x);
void tanh_backward(std::size_t count, const double* act, double* grad);

}  // namespace reference

}  // namespace ghrl::nn::kernels
