#include "ghrl/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ghrl::nn::kernels {

namespace {

constexpr std::size_t kRowTile = 8;
constexpr std::size_t kColTile = 16;
// Below this many rows the B panel is read in place instead of packed.
constexpr std::size_t kPackMinRows = 32;

// Computes an MR x nr block of C. Every element is accumulated as a chain of
// fused multiply-adds over p = 0..k-1, whichever branch runs, so packed and
// unpacked calls and edge tiles all round identically.
template <std::size_t MR>
void micro_kernel(std::size_t k, const double* a, std::size_t lda, const double* b,
                  std::size_t ldb, std::size_t nr, double* c, std::size_t ldc, bool accumulate) {
  alignas(64) double acc[MR][kColTile] = {};
  if (nr == kColTile) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * ldb;
      for (std::size_t r = 0; r < MR; ++r) {
        const double av = a[r * lda + p];
#pragma omp simd
        for (std::size_t j = 0; j < kColTile; ++j) acc[r][j] = std::fma(av, bp[j], acc[r][j]);
      }
    }
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * ldb;
      for (std::size_t r = 0; r < MR; ++r) {
        const double av = a[r * lda + p];
        for (std::size_t j = 0; j < nr; ++j) acc[r][j] = std::fma(av, bp[j], acc[r][j]);
      }
    }
  }
  for (std::size_t r = 0; r < MR; ++r) {
    double* cr = c + r * ldc;
    if (accumulate) {
      for (std::size_t j = 0; j < nr; ++j) cr[j] += acc[r][j];
    } else {
      for (std::size_t j = 0; j < nr; ++j) cr[j] = acc[r][j];
    }
  }
}

void row_block(std::size_t rows, std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, std::size_t nr, double* c, std::size_t ldc, bool accumulate) {
  switch (rows) {
    case 8: micro_kernel<8>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 7: micro_kernel<7>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 6: micro_kernel<6>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 5: micro_kernel<5>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 4: micro_kernel<4>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 3: micro_kernel<3>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 2: micro_kernel<2>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    case 1: micro_kernel<1>(k, a, lda, b, ldb, nr, c, ldc, accumulate); break;
    default: break;
  }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    return;
  }
  const std::size_t col_tiles = (n + kColTile - 1) / kColTile;
  const bool pack = m >= kPackMinRows;

#pragma omp parallel if (m * n * k > (1u << 18))
  {
    std::vector<double> panel(pack ? k * kColTile : 0);
#pragma omp for schedule(static)
    for (std::size_t t = 0; t < col_tiles; ++t) {
      const std::size_t j0 = t * kColTile;
      const std::size_t nr = std::min(kColTile, n - j0);
      const double* bp = b + j0;
      std::size_t ldb = n;
      if (pack) {
        for (std::size_t p = 0; p < k; ++p) {
          std::memcpy(panel.data() + p * kColTile, b + p * n + j0, nr * sizeof(double));
        }
        bp = panel.data();
        ldb = kColTile;
      }
      for (std::size_t i = 0; i < m; i += kRowTile) {
        const std::size_t rows = std::min(kRowTile, m - i);
        row_block(rows, k, a + i * k, k, bp, ldb, nr, c + i * n + j0, n, accumulate);
      }
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst) {
  constexpr std::size_t kBlock = 32;
#pragma omp parallel for schedule(static) if (rows * cols > (1u << 16))
  for (std::size_t i0 = 0; i0 < rows; i0 += kBlock) {
    const std::size_t i1 = std::min(rows, i0 + kBlock);
    for (std::size_t j0 = 0; j0 < cols; j0 += kBlock) {
      const std::size_t j1 = std::min(cols, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

void add_row_bias(std::size_t m, std::size_t n, const double* bias, double* x) {
#pragma omp parallel for schedule(static) if (m * n > (1u << 16))
  for (std::size_t i = 0; i < m; ++i) {
    double* xr = x + i * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) xr[j] += bias[j];
  }
}

void column_sums(std::size_t m, std::size_t n, const double* x, double* sums, bool accumulate) {
  // Parallel over columns keeps each sum in row order.
#pragma omp parallel for schedule(static) if (m * n > (1u << 16))
  for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
    const std::size_t j1 = std::min(n, j0 + kColTile);
    for (std::size_t j = j0; j < j1; ++j) {
      if (!accumulate) sums[j] = 0.0;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double* xr = x + i * n;
      for (std::size_t j = j0; j < j1; ++j) sums[j] += xr[j];
    }
  }
}

void tanh_inplace(std::size_t count, double* x) {
#pragma omp parallel for schedule(static) if (count > (1u << 16))
  for (std::size_t i = 0; i < count; ++i) x[i] = std::tanh(x[i]);
}

void tanh_backward(std::size_t count, const double* act, double* grad) {
#pragma omp parallel for simd schedule(static) if (count > (1u << 16))
  for (std::size_t i = 0; i < count; ++i) grad[i] *= 1.0 - act[i] * act[i];
}

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* src, double* dst) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
}

void add_row_bias(std::size_t m, std::size_t n, const double* bias, double* x) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[i * n + j] += bias[j];
  }
}

void column_sums(std::size_t m, std::size_t n, const double* x, double* sums, bool accumulate) {
  for (std::size_t j = 0; j < n; ++j) {
    double s = accumulate ? sums[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i) s += x[i * n + j];
    sums[j] = s;
  }
}

void tanh_inplace(std::size_t count, double* x) {
  for (std::size_t i = 0; i < count; ++i) x[i] = std::tanh(x[i]);
}

void tanh_backward(std::size_t count, const double* act, double* grad) {
  for (std::size_t i = 0; i < count; ++i) grad[i] *= 1.0 - act[i] * act[i];
}

}  // namespace reference

}  // namespace ghrl::nn::kernels
