// SPDX-License-Identifier: Apache-2.0

#include "molgen/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace molgen {

namespace {

// Below this many multiply-adds the parallel fork costs more than it saves.
constexpr long kParallelThreshold = 16384;

inline void row_nn(const double* a, const double* b, double* c, int i, int k, int m) {
  double* crow = c + static_cast<size_t>(i) * m;
  std::memset(crow, 0, sizeof(double) * static_cast<size_t>(m));
  const double* arow = a + static_cast<size_t>(i) * k;
  for (int p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b + static_cast<size_t>(p) * m;
    for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
  }
}

inline void row_nt(const double* a, const double* b, double* c, int i, int k, int m) {
  double* crow = c + static_cast<size_t>(i) * m;
  const double* arow = a + static_cast<size_t>(i) * k;
  for (int j = 0; j < m; ++j) {
    const double* brow = b + static_cast<size_t>(j) * k;
    double acc = 0.0;
    for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
    crow[j] = acc;
  }
}

// a is k x n; row i of the n x m result gathers column i of a.
inline void row_tn(const double* a, const double* b, double* c, int i, int n, int k, int m) {
  double* crow = c + static_cast<size_t>(i) * m;
  std::memset(crow, 0, sizeof(double) * static_cast<size_t>(m));
  for (int p = 0; p < k; ++p) {
    const double av = a[static_cast<size_t>(p) * n + i];
    const double* brow = b + static_cast<size_t>(p) * m;
    for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
  }
}

}  // namespace

void matmul_nn_serial(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) row_nn(a, b, c, i, k, m);
}

void matmul_nt_serial(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) row_nt(a, b, c, i, k, m);
}

void matmul_tn_serial(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) row_tn(a, b, c, i, n, k, m);
}

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m) {
#ifdef _OPENMP
  if (static_cast<long>(n) * k * m >= kParallelThreshold) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) row_nn(a, b, c, i, k, m);
    return;
  }
#endif
  matmul_nn_serial(a, b, c, n, k, m);
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
#ifdef _OPENMP
  if (static_cast<long>(n) * k * m >= kParallelThreshold) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) row_nt(a, b, c, i, k, m);
    return;
  }
#endif
  matmul_nt_serial(a, b, c, n, k, m);
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m) {
#ifdef _OPENMP
  if (static_cast<long>(n) * k * m >= kParallelThreshold) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) row_tn(a, b, c, i, n, k, m);
    return;
  }
#endif
  matmul_tn_serial(a, b, c, n, k, m);
}

void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int thread_count() {
#ifdef _OPENMP
  int n = 1;
#pragma omp parallel
  {
#pragma omp single
    n = omp_get_num_threads();
  }
  return n;
#else
  return 1;
#endif
}

}  // namespace molgen
