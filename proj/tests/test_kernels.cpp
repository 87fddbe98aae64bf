// SPDX-License-Identifier: Apache-2.0

#include <tuple>
#include <vector>

#include "doctest.h"
#include "molgen/kernels.hpp"
#include "molgen/rng.hpp"

using namespace molgen;

namespace {

std::vector<double> random_matrix(int rows, int cols, Rng& rng) {
  std::vector<double> m(static_cast<size_t>(rows) * cols);
  for (double& x : m) x = rng.uniform(-1.0, 1.0);
  return m;
}

// Textbook triple loop, kept independent of the library kernels.
std::vector<double> naive_nn(const std::vector<double>& a, const std::vector<double>& b, int n,
                             int k, int m) {
  std::vector<double> c(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < m; ++j) c[static_cast<size_t>(i) * m + j] += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * m + j];
  return c;
}

}  // namespace

TEST_CASE("matmul_nn matches the naive triple loop") {
  Rng rng(11);
  for (const auto [n, k, m] : {std::tuple{1, 1, 1}, {3, 4, 5}, {17, 9, 33}, {64, 64, 64}}) {
    const auto a = random_matrix(n, k, rng);
    const auto b = random_matrix(k, m, rng);
    std::vector<double> c(static_cast<size_t>(n) * m);
    matmul_nn(a.data(), b.data(), c.data(), n, k, m);
    const auto ref = naive_nn(a, b, n, k, m);
    for (size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("identity matmul returns the input") {
  Rng rng(12);
  const int n = 8;
  std::vector<double> eye(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) eye[static_cast<size_t>(i) * n + i] = 1.0;
  const auto a = random_matrix(n, n, rng);
  std::vector<double> c(static_cast<size_t>(n) * n);
  matmul_nn(eye.data(), a.data(), c.data(), n, n, n);
  CHECK(c == a);
}

TEST_CASE("nt and tn agree with explicit transposition") {
  Rng rng(13);
  const int n = 7, k = 5, m = 9;
  const auto a = random_matrix(n, k, rng);
  const auto b = random_matrix(m, k, rng);  // for nt: c = a * b^T
  std::vector<double> bt(static_cast<size_t>(k) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) bt[static_cast<size_t>(j) * m + i] = b[static_cast<size_t>(i) * k + j];
  std::vector<double> c1(static_cast<size_t>(n) * m), c2(static_cast<size_t>(n) * m);
  matmul_nt(a.data(), b.data(), c1.data(), n, k, m);
  matmul_nn(a.data(), bt.data(), c2.data(), n, k, m);
  for (size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));

  const auto at = random_matrix(k, n, rng);  // for tn: c = at^T * bb
  const auto bb = random_matrix(k, m, rng);
  std::vector<double> att(static_cast<size_t>(n) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) att[static_cast<size_t>(j) * k + i] = at[static_cast<size_t>(i) * n + j];
  std::vector<double> c3(static_cast<size_t>(n) * m), c4(static_cast<size_t>(n) * m);
  matmul_tn(at.data(), bb.data(), c3.data(), n, k, m);
  matmul_nn(att.data(), bb.data(), c4.data(), n, k, m);
  for (size_t i = 0; i < c3.size(); ++i) CHECK(c3[i] == doctest::Approx(c4[i]).epsilon(1e-12));
}

TEST_CASE("parallel and serial kernels are bit-identical") {
  Rng rng(14);
  // Sizes straddling the parallel threshold, plus thread-count changes.
  for (const auto [n, k, m] : {std::tuple{4, 4, 4}, {96, 48, 80}, {150, 64, 150}}) {
    const auto a = random_matrix(n, k, rng);
    const auto b = random_matrix(k, m, rng);
    std::vector<double> serial(static_cast<size_t>(n) * m);
    matmul_nn_serial(a.data(), b.data(), serial.data(), n, k, m);
    for (int threads : {1, 2, 3, 8}) {
      set_thread_count(threads);
      std::vector<double> par(static_cast<size_t>(n) * m);
      matmul_nn(a.data(), b.data(), par.data(), n, k, m);
      CHECK(par == serial);
    }

    const auto bt = random_matrix(m, k, rng);
    std::vector<double> s_nt(static_cast<size_t>(n) * m), p_nt(static_cast<size_t>(n) * m);
    matmul_nt_serial(a.data(), bt.data(), s_nt.data(), n, k, m);
    set_thread_count(4);
    matmul_nt(a.data(), bt.data(), p_nt.data(), n, k, m);
    CHECK(p_nt == s_nt);

    const auto at2 = random_matrix(k, n, rng);
    const auto b2 = random_matrix(k, m, rng);
    std::vector<double> s_tn(static_cast<size_t>(n) * m), p_tn(static_cast<size_t>(n) * m);
    matmul_tn_serial(at2.data(), b2.data(), s_tn.data(), n, k, m);
    matmul_tn(at2.data(), b2.data(), p_tn.data(), n, k, m);
    CHECK(p_tn == s_tn);
  }
  set_thread_count(0);
}
