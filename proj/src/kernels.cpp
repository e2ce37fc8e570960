#include "mabicap/kernels.hpp"

namespace mabicap {
namespace kernels {

void gemm_nn_serial(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      if (accumulate)
        c[i * n + j] += acc;
      else
        c[i * n + j] = acc;
    }
  }
}

void gemm_nn_omp(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      if (accumulate)
        c[i * n + j] += acc;
      else
        c[i * n + j] = acc;
    }
  }
#else
  gemm_nn_serial(a, b, c, m, k, n, accumulate);
#endif
}

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
#ifdef _OPENMP
  if (static_cast<long long>(m) * k * n >= kGemmParallelFlops) {
    gemm_nn_omp(a, b, c, m, k, n, accumulate);
    return;
  }
#endif
  gemm_nn_serial(a, b, c, m, k, n, accumulate);
}

void gemm_nt_serial(const double* a, const double* b, double* c, int m, int p,
                    int q, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < q; ++j) {
      double acc = 0.0;
      for (int r = 0; r < p; ++r) acc += a[i * p + r] * b[j * p + r];
      if (accumulate)
        c[i * q + j] += acc;
      else
        c[i * q + j] = acc;
    }
  }
}

void gemm_nt_omp(const double* a, const double* b, double* c, int m, int p,
                 int q, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < q; ++j) {
      double acc = 0.0;
      for (int r = 0; r < p; ++r) acc += a[i * p + r] * b[j * p + r];
      if (accumulate)
        c[i * q + j] += acc;
      else
        c[i * q + j] = acc;
    }
  }
#else
  gemm_nt_serial(a, b, c, m, p, q, accumulate);
#endif
}

void gemm_nt(const double* a, const double* b, double* c, int m, int p, int q,
             bool accumulate) {
#ifdef _OPENMP
  if (static_cast<long long>(m) * p * q >= kGemmParallelFlops) {
    gemm_nt_omp(a, b, c, m, p, q, accumulate);
    return;
  }
#endif
  gemm_nt_serial(a, b, c, m, p, q, accumulate);
}

void gemm_tn_serial(const double* a, const double* b, double* c, int p, int m,
                    int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int r = 0; r < p; ++r) acc += a[r * m + i] * b[r * n + j];
      if (accumulate)
        c[i * n + j] += acc;
      else
        c[i * n + j] = acc;
    }
  }
}

void gemm_tn_omp(const double* a, const double* b, double* c, int p, int m,
                 int n, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int r = 0; r < p; ++r) acc += a[r * m + i] * b[r * n + j];
      if (accumulate)
        c[i * n + j] += acc;
      else
        c[i * n + j] = acc;
    }
  }
#else
  gemm_tn_serial(a, b, c, p, m, n, accumulate);
#endif
}

void gemm_tn(const double* a, const double* b, double* c, int p, int m, int n,
             bool accumulate) {
#ifdef _OPENMP
  if (static_cast<long long>(p) * m * n >= kGemmParallelFlops) {
    gemm_tn_omp(a, b, c, p, m, n, accumulate);
    return;
  }
#endif
  gemm_tn_serial(a, b, c, p, m, n, accumulate);
}

void axpy_serial(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_omp(double alpha, const double* x, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] += alpha * x[static_cast<std::size_t>(i)];
#else
  axpy_serial(alpha, x, y, n);
#endif
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#ifdef _OPENMP
  if (n >= kMapParallelLen) {
    axpy_omp(alpha, x, y, n);
    return;
  }
#endif
  axpy_serial(alpha, x, y, n);
}

}  // namespace kernels
}  // namespace mabicap
