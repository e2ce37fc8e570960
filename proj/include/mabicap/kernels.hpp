#ifndef MABICAP_KERNELS_HPP_
#define MABICAP_KERNELS_HPP_

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mabicap {
namespace kernels {

// Dense kernels come in two flavours: a plain serial reference and an
// OpenMP-parallel version. Both produce bit-identical results: every output
// element is reduced by the same serial inner loop, the parallel variants
// only split independent elements across threads. The un-suffixed entry
// points dispatch on problem size.

// Work thresholds below which the dispatchers stay serial.
inline constexpr long long kGemmParallelFlops = 1LL << 16;
inline constexpr std::size_t kMapParallelLen = 1u << 15;

// c[m x n] = a[m x k] * b[k x n]; accumulates into c when accumulate is set.
void gemm_nn_serial(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate);
void gemm_nn_omp(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate);
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);

// c[m x q] = a[m x p] * b[q x p]^T
void gemm_nt_serial(const double* a, const double* b, double* c, int m, int p,
                    int q, bool accumulate);
void gemm_nt_omp(const double* a, const double* b, double* c, int m, int p,
                 int q, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, int m, int p, int q,
             bool accumulate);

// c[m x n] = a[p x m]^T * b[p x n]
void gemm_tn_serial(const double* a, const double* b, double* c, int p, int m,
                    int n, bool accumulate);
void gemm_tn_omp(const double* a, const double* b, double* c, int p, int m,
                 int n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, int p, int m, int n,
             bool accumulate);

// y[i] += alpha * x[i]
void axpy_serial(double alpha, const double* x, double* y, std::size_t n);
void axpy_omp(double alpha, const double* x, double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

// y[i] = f(x[i])
template <typename F>
void map_serial(const double* x, double* y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <typename F>
void map_omp(const double* x, double* y, std::size_t n, F f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] = f(x[static_cast<std::size_t>(i)]);
#else
  map_serial(x, y, n, f);
#endif
}

template <typename F>
void map(const double* x, double* y, std::size_t n, F f) {
#ifdef _OPENMP
  if (n >= kMapParallelLen) {
    map_omp(x, y, n, f);
    return;
  }
#endif
  map_serial(x, y, n, f);
}

// z[i] = f(x[i], y[i])
template <typename F>
void zip_serial(const double* x, const double* y, double* z, std::size_t n,
                F f) {
  for (std::size_t i = 0; i < n; ++i) z[i] = f(x[i], y[i]);
}

template <typename F>
void zip_omp(const double* x, const double* y, double* z, std::size_t n, F f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    z[i] = f(x[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)]);
#else
  zip_serial(x, y, z, n, f);
#endif
}

template <typename F>
void zip(const double* x, const double* y, double* z, std::size_t n, F f) {
#ifdef _OPENMP
  if (n >= kMapParallelLen) {
    zip_omp(x, y, z, n, f);
    return;
  }
#endif
  zip_serial(x, y, z, n, f);
}

}  // namespace kernels
}  // namespace mabicap

#endif  // MABICAP_KERNELS_HPP_
