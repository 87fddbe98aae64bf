// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "molgen/chem.hpp"
#include "molgen/errors.hpp"
#include "molgen/fingerprint.hpp"
#include "molgen/pairs.hpp"
#include "molgen/properties.hpp"

namespace molgen {

// One curated molecule with its cached descriptors. The fingerprint always
// equals morgan_fingerprint(parse_graph(smiles)) and the properties come from
// the deterministic surrogate oracle.
struct MoleculeRecord {
  std::string smiles;
  PropertyVector properties{};
  Fingerprint fingerprint;

  bool operator==(const MoleculeRecord&) const = default;
};

// A mined pair referring into the corpus by index; similarity caches
// tanimoto between the two fingerprints.
struct PairRecord {
  int x = 0;
  int y = 0;
  double similarity = 0.0;

  bool operator==(const PairRecord&) const = default;
};

// Parse, score and fingerprint every molecule. Parse errors carry the
// offending entry's position and text.
std::vector<MoleculeRecord> build_records(const std::vector<std::string>& smiles);

// Exact string-match removal of every molecule appearing in any holdout set.
// Filters in place and returns the number of removed records.
int exclude_molecules(std::vector<MoleculeRecord>& corpus,
                      const std::vector<std::vector<std::string>>& holdouts);

// Work counters for the pruned miner.
struct MiningStats {
  long long candidates = 0;   // index-driven candidate pairs examined
  long long evaluations = 0;  // full Tanimoto evaluations performed
};

// Every ordered pair (x, y), x != y, with tanimoto >= delta, in (x, y)
// lexicographic index order. Candidates are generated through an inverted
// bit -> molecule index, so pairs sharing no fingerprint bit are never
// evaluated (their Tanimoto is 0 < delta). Parallel over blocks of the first
// index; the result is re-sorted, so it is identical for any worker count.
// Throws RangeError unless delta in (0, 1], WidthMismatch on mixed widths.
std::vector<PairRecord> mine_pairs(const std::vector<MoleculeRecord>& corpus, double delta,
                                   MiningStats* stats = nullptr);

// Serial reference: the naive O(n^2) double loop. Oracle for the pruned
// miner and baseline for the benchmark.
std::vector<PairRecord> mine_pairs_naive(const std::vector<MoleculeRecord>& corpus, double delta);

// Negative pool for similarity pre-training: per molecule, `per_molecule_cap`
// seeded random partner draws keep the pairs rejected by the delta test
// (tanimoto < delta). Deduplicated, sorted by (x, y). Throws RangeError.
std::vector<PairRecord> sample_negative_pairs(const std::vector<MoleculeRecord>& corpus,
                                              double delta, int per_molecule_cap, uint64_t seed);

// Stratified subsample of a mixed positive/negative pool. Classes come from
// similarity >= delta; each class is stratified over `bins` uniform
// similarity bins on [0, 1] with largest-remainder quotas, so the sample
// preserves the per-class similarity histogram. The positive share of the
// sample hits round(fraction * pool * ratio) exactly, which keeps the
// achieved ratio within +-1% of target once the sample has >= 50 rows.
// Sorted by (x, y). Throws RangeError, EmptyCorpus, InsufficientNegatives
// (negative class too small) and TooFewRows (positive class too small or
// empty sample).
std::vector<PairRecord> subsample_simnet(const std::vector<PairRecord>& pool, double fraction,
                                         double target_positive_ratio, int bins, uint64_t seed,
                                         double delta = 0.4);

// Seeded shuffle of 0..n-1 cut at round(train_ratio * n): (train, dev).
// Disjoint and exhaustive. Throws RangeError unless train_ratio in (0, 1),
// TooFewRows when either side would be empty.
std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double train_ratio,
                                                            uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& rows, double train_ratio,
                                                uint64_t seed) {
  const auto idx = split_indices(static_cast<int>(rows.size()), train_ratio, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(idx.first.size());
  out.second.reserve(idx.second.size());
  for (int i : idx.first) out.first.push_back(rows[static_cast<size_t>(i)]);
  for (int i : idx.second) out.second.push_back(rows[static_cast<size_t>(i)]);
  return out;
}

// Pair artifacts: expand index pairs into full rows. The labeled variant
// marks similarity >= delta as class 1.
std::vector<PairRow> to_pair_rows(const std::vector<MoleculeRecord>& corpus,
                                  const std::vector<PairRecord>& pairs);
std::vector<PairRow> to_labeled_rows(const std::vector<MoleculeRecord>& corpus,
                                     const std::vector<PairRecord>& pairs, double delta = 0.4);

// Number of rows whose X or Y appears in any holdout set (0 = leakage-free).
int audit_leakage(const std::vector<PairRow>& rows,
                  const std::vector<std::vector<std::string>>& holdouts);

}  // namespace molgen
