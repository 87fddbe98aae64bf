// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace molgen {

// Dense double-precision matmul kernels. Each has an OpenMP-parallel fast path
// (parallel over output rows) and a serial reference used by the tests and the
// benchmark. Per output element the accumulation order is identical in both
// paths, so serial and parallel results are bit-identical for any thread
// count.
//
// c[n x m] = a[n x k] * b[k x m]          (nn)
// c[n x m] = a[n x k] * b[m x k]^T        (nt)
// c[n x m] = a[k x n]^T * b[k x m]        (tn)

void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m);

void matmul_nn_serial(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_nt_serial(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_tn_serial(const double* a, const double* b, double* c, int n, int k, int m);

// Thread-count control shared by every parallel region in the library.
// 0 keeps the OpenMP default.
void set_thread_count(int threads);
int thread_count();

}  // namespace molgen
