// SPDX-License-Identifier: Apache-2.0
//
// Serial-vs-parallel comparison for the dense matmul kernels and the pair
// miner. Every parallel path is checked against its serial reference before
// timing is reported, so a speedup line doubles as a correctness witness.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "molgen/kernels.hpp"
#include "molgen/pipeline.hpp"
#include "molgen/rng.hpp"

namespace {

using namespace molgen;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_ms();
    f();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

using MatmulFn = void (*)(const double*, const double*, double*, int, int, int);

void bench_matmul(const char* name, MatmulFn parallel, MatmulFn serial, int n, int repeats) {
  Rng rng(fnv1a64_str(name) ^ static_cast<uint64_t>(n));
  std::vector<double> a(static_cast<size_t>(n) * n);
  std::vector<double> b(static_cast<size_t>(n) * n);
  std::vector<double> c_serial(a.size());
  std::vector<double> c_parallel(a.size());
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);

  serial(a.data(), b.data(), c_serial.data(), n, n, n);
  parallel(a.data(), b.data(), c_parallel.data(), n, n, n);
  const bool identical =
      std::memcmp(c_serial.data(), c_parallel.data(), a.size() * sizeof(double)) == 0;

  const double t_serial =
      best_of(repeats, [&] { serial(a.data(), b.data(), c_serial.data(), n, n, n); });
  const double t_parallel =
      best_of(repeats, [&] { parallel(a.data(), b.data(), c_parallel.data(), n, n, n); });
  const double flops = 2.0 * n * double(n) * n;
  std::printf("%-10s %5d  %9.2f ms  %9.2f ms  %6.2fx  %7.2f GFLOP/s  %s\n", name, n, t_serial,
              t_parallel, t_serial / t_parallel, flops / (t_parallel * 1e6),
              identical ? "bit-identical" : "MISMATCH");
}

std::vector<MoleculeRecord> clustered_corpus(uint64_t seed, int bases, int mutants_per_base) {
  Rng rng(seed);
  std::set<std::string> unique;
  while (static_cast<int>(unique.size()) < bases)
    unique.insert(testing::make_random_smiles(rng, 4, 9));
  std::set<std::string> all = unique;
  for (const std::string& s : unique)
    for (int m = 0; m < mutants_per_base; ++m) all.insert(testing::mutate_smiles(rng, s));
  return build_records({all.begin(), all.end()});
}

std::vector<MoleculeRecord> random_corpus(uint64_t seed, int n) {
  Rng rng(seed);
  return build_records(testing::make_unique_smiles(rng, n));
}

void bench_mining(const char* tag, const std::vector<MoleculeRecord>& corpus, double delta,
                  int repeats) {
  const int n = static_cast<int>(corpus.size());

  MiningStats stats;
  const std::vector<PairRecord> pruned = mine_pairs(corpus, delta, &stats);
  const std::vector<PairRecord> naive = mine_pairs_naive(corpus, delta);
  const bool identical = pruned == naive;

  const double t_naive = best_of(repeats, [&] { mine_pairs_naive(corpus, delta); });
  const double t_pruned = best_of(repeats, [&] { mine_pairs(corpus, delta); });
  const long long naive_evals = static_cast<long long>(n) * (n - 1) / 2;
  std::printf("%-10s %5d  %9.2f ms  %9.2f ms  %6.2fx  %s\n", tag, n, t_naive, t_pruned,
              t_naive / t_pruned, identical ? "equal" : "MISMATCH");
  std::printf("           pairs %zu, candidates %lld of %lld (%.1f%%), evaluations %lld\n",
              pruned.size(), stats.candidates, naive_evals,
              100.0 * static_cast<double>(stats.candidates) / static_cast<double>(naive_evals),
              stats.evaluations);
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = 5;
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      quick = true;
    } else if (arg == "--repeats" && i + 1 < argc) {
      repeats = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--repeats N]\n", argv[0]);
      return 2;
    }
  }
  if (repeats < 1) repeats = 1;

  std::printf("threads: %d\n\n", thread_count());
  std::printf("%-10s %5s  %12s  %12s  %7s\n", "kernel", "n", "serial", "parallel", "speedup");

  const std::vector<int> sizes = quick ? std::vector<int>{128} : std::vector<int>{128, 256, 384};
  for (int n : sizes) {
    bench_matmul("matmul_nn", matmul_nn, matmul_nn_serial, n, repeats);
    bench_matmul("matmul_nt", matmul_nt, matmul_nt_serial, n, repeats);
    bench_matmul("matmul_tn", matmul_tn, matmul_tn_serial, n, repeats);
  }

  std::printf("\n%-10s %5s  %12s  %12s  %7s\n", "miner", "n", "naive", "pruned", "speedup");
  if (quick) {
    bench_mining("clustered", clustered_corpus(977, 60, 3), 0.4, repeats);
    bench_mining("random", random_corpus(978, 240), 0.4, repeats);
  } else {
    bench_mining("clustered", clustered_corpus(977, 150, 4), 0.4, repeats);
    bench_mining("random", random_corpus(978, 750), 0.4, repeats);
  }
  return 0;
}
