// SPDX-License-Identifier: Apache-2.0

#include "molgen/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "molgen/rng.hpp"

namespace molgen {

namespace {

bool pair_less(const PairRecord& a, const PairRecord& b) {
  if (a.x != b.x) return a.x < b.x;
  return a.y < b.y;
}

std::unordered_set<std::string> holdout_union(
    const std::vector<std::vector<std::string>>& holdouts) {
  std::unordered_set<std::string> all;
  for (const auto& set : holdouts) all.insert(set.begin(), set.end());
  return all;
}

// Largest-remainder apportionment of `target` draws over per-bin counts.
// Quotas never exceed the bin counts; requires target <= sum(counts).
std::vector<long long> bin_quotas(const std::vector<long long>& counts, long long target) {
  const size_t bins = counts.size();
  long long total = 0;
  for (long long c : counts) total += c;
  std::vector<long long> quota(bins, 0);
  if (total == 0 || target == 0) return quota;
  std::vector<double> remainder(bins, 0.0);
  long long assigned = 0;
  for (size_t b = 0; b < bins; ++b) {
    const double share =
        static_cast<double>(target) * static_cast<double>(counts[b]) / static_cast<double>(total);
    quota[b] = static_cast<long long>(std::floor(share));
    remainder[b] = share - std::floor(share);
    assigned += quota[b];
  }
  std::vector<size_t> order(bins);
  for (size_t b = 0; b < bins; ++b) order[b] = b;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  long long left = target - assigned;
  while (left > 0) {
    bool moved = false;
    for (size_t b : order) {
      if (left == 0) break;
      if (quota[b] < counts[b]) {
        ++quota[b];
        --left;
        moved = true;
      }
    }
    if (!moved) break;  // unreachable when target <= total
  }
  return quota;
}

}  // namespace

std::vector<MoleculeRecord> build_records(const std::vector<std::string>& smiles) {
  std::vector<MoleculeRecord> out;
  out.reserve(smiles.size());
  for (size_t i = 0; i < smiles.size(); ++i) {
    try {
      MoleculeRecord rec;
      rec.smiles = smiles[i];
      const MolecularGraph g = parse_graph(smiles[i]);
      rec.properties = surrogate_properties(g);
      rec.fingerprint = morgan_fingerprint(g);
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      throw ParseError("molecule " + std::to_string(i + 1) + " ('" + smiles[i] +
                       "'): " + e.what());
    }
  }
  return out;
}

int exclude_molecules(std::vector<MoleculeRecord>& corpus,
                      const std::vector<std::vector<std::string>>& holdouts) {
  const std::unordered_set<std::string> banned = holdout_union(holdouts);
  const size_t before = corpus.size();
  std::erase_if(corpus, [&](const MoleculeRecord& r) { return banned.count(r.smiles) > 0; });
  return static_cast<int>(before - corpus.size());
}

std::vector<PairRecord> mine_pairs(const std::vector<MoleculeRecord>& corpus, double delta,
                                   MiningStats* stats) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw RangeError("mine_pairs: delta must be in (0, 1]");
  }
  const int n = static_cast<int>(corpus.size());
  int n_bits = 0;
  std::vector<std::vector<int>> mol_bits(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Fingerprint& fp = corpus[static_cast<size_t>(i)].fingerprint;
    if (i == 0) {
      n_bits = fp.n_bits;
    } else if (fp.n_bits != n_bits) {
      throw WidthMismatch("mine_pairs: mixed fingerprint widths");
    }
    mol_bits[static_cast<size_t>(i)] = fp.bits();
  }

  // Inverted bit -> molecule postings, ascending by construction.
  std::vector<std::vector<int>> postings(static_cast<size_t>(n_bits));
  for (int i = 0; i < n; ++i) {
    for (int bit : mol_bits[static_cast<size_t>(i)]) {
      postings[static_cast<size_t>(bit)].push_back(i);
    }
  }

  std::vector<PairRecord> halves;  // unordered i < j survivors
  long long candidates = 0;
  long long evaluations = 0;

#pragma omp parallel
  {
    std::vector<char> stamp(static_cast<size_t>(n), 0);
    std::vector<int> touched;
    std::vector<PairRecord> local;
    long long local_candidates = 0;
    long long local_evaluations = 0;

#pragma omp for schedule(dynamic, 16)
    for (int i = 0; i < n; ++i) {
      touched.clear();
      for (int bit : mol_bits[static_cast<size_t>(i)]) {
        for (int j : postings[static_cast<size_t>(bit)]) {
          if (j > i && !stamp[static_cast<size_t>(j)]) {
            stamp[static_cast<size_t>(j)] = 1;
            touched.push_back(j);
          }
        }
      }
      local_candidates += static_cast<long long>(touched.size());
      for (int j : touched) {
        stamp[static_cast<size_t>(j)] = 0;
        ++local_evaluations;
        const double s = tanimoto(corpus[static_cast<size_t>(i)].fingerprint,
                                  corpus[static_cast<size_t>(j)].fingerprint);
        if (s >= delta) local.push_back({i, j, s});
      }
    }

#pragma omp critical(molgen_mine_merge)
    {
      halves.insert(halves.end(), local.begin(), local.end());
      candidates += local_candidates;
      evaluations += local_evaluations;
    }
  }

  std::vector<PairRecord> out;
  out.reserve(halves.size() * 2);
  for (const PairRecord& p : halves) {
    out.push_back(p);
    out.push_back({p.y, p.x, p.similarity});
  }
  std::sort(out.begin(), out.end(), pair_less);
  if (stats) {
    stats->candidates = candidates;
    stats->evaluations = evaluations;
  }
  return out;
}

std::vector<PairRecord> mine_pairs_naive(const std::vector<MoleculeRecord>& corpus, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw RangeError("mine_pairs: delta must be in (0, 1]");
  }
  const int n = static_cast<int>(corpus.size());
  std::vector<PairRecord> out;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      const double s = tanimoto(corpus[static_cast<size_t>(x)].fingerprint,
                                corpus[static_cast<size_t>(y)].fingerprint);
      if (s >= delta) out.push_back({x, y, s});
    }
  }
  return out;
}

std::vector<PairRecord> sample_negative_pairs(const std::vector<MoleculeRecord>& corpus,
                                              double delta, int per_molecule_cap, uint64_t seed) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw RangeError("sample_negative_pairs: delta must be in (0, 1]");
  }
  if (per_molecule_cap < 1) {
    throw RangeError("sample_negative_pairs: cap must be >= 1");
  }
  const int n = static_cast<int>(corpus.size());
  Rng rng(seed);
  std::vector<PairRecord> out;
  if (n < 2) return out;
  std::unordered_set<uint64_t> seen;
  for (int i = 0; i < n; ++i) {
    for (int draw = 0; draw < per_molecule_cap; ++draw) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
      if (j == i) continue;
      const uint64_t key = (static_cast<uint64_t>(i) << 32) | static_cast<uint64_t>(j);
      if (!seen.insert(key).second) continue;
      const double s = tanimoto(corpus[static_cast<size_t>(i)].fingerprint,
                                corpus[static_cast<size_t>(j)].fingerprint);
      if (s < delta) out.push_back({i, j, s});
    }
  }
  std::sort(out.begin(), out.end(), pair_less);
  return out;
}

std::vector<PairRecord> subsample_simnet(const std::vector<PairRecord>& pool, double fraction,
                                         double target_positive_ratio, int bins, uint64_t seed,
                                         double delta) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw RangeError("subsample_simnet: fraction must be in (0, 1]");
  }
  if (!(target_positive_ratio >= 0.0 && target_positive_ratio <= 1.0)) {
    throw RangeError("subsample_simnet: positive ratio must be in [0, 1]");
  }
  if (bins < 1) throw RangeError("subsample_simnet: bins must be >= 1");
  if (pool.empty()) throw EmptyCorpus("subsample_simnet: empty pool");

  const long long n_target = std::llround(fraction * static_cast<double>(pool.size()));
  if (n_target < 1) throw TooFewRows("subsample_simnet: sample would be empty");
  const long long pos_target = std::llround(static_cast<double>(n_target) * target_positive_ratio);
  const long long neg_target = n_target - pos_target;

  // Per class, bucket pool indices by similarity bin.
  const auto bin_of = [&](double s) {
    int b = static_cast<int>(std::floor(s * bins));
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    return b;
  };
  std::vector<std::vector<int>> members[2];  // [class][bin] -> pool indices
  members[0].assign(static_cast<size_t>(bins), {});
  members[1].assign(static_cast<size_t>(bins), {});
  for (size_t i = 0; i < pool.size(); ++i) {
    const int cls = pool[i].similarity >= delta ? 1 : 0;
    members[cls][static_cast<size_t>(bin_of(pool[i].similarity))].push_back(
        static_cast<int>(i));
  }
  long long class_total[2] = {0, 0};
  for (int cls = 0; cls < 2; ++cls) {
    for (const auto& m : members[cls]) class_total[cls] += static_cast<long long>(m.size());
  }
  if (class_total[1] < pos_target) {
    throw TooFewRows("subsample_simnet: only " + std::to_string(class_total[1]) +
                     " positive pairs for a target of " + std::to_string(pos_target));
  }
  if (class_total[0] < neg_target) {
    throw InsufficientNegatives("subsample_simnet: only " + std::to_string(class_total[0]) +
                                " negative pairs for a target of " + std::to_string(neg_target));
  }

  Rng rng(seed);
  std::vector<PairRecord> out;
  out.reserve(static_cast<size_t>(n_target));
  const long long class_target[2] = {neg_target, pos_target};
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<long long> counts(static_cast<size_t>(bins));
    for (int b = 0; b < bins; ++b) {
      counts[static_cast<size_t>(b)] = static_cast<long long>(members[cls][static_cast<size_t>(b)].size());
    }
    const std::vector<long long> quota = bin_quotas(counts, class_target[cls]);
    for (int b = 0; b < bins; ++b) {
      std::vector<int>& m = members[cls][static_cast<size_t>(b)];
      rng.shuffle(m);
      for (long long k = 0; k < quota[static_cast<size_t>(b)]; ++k) {
        out.push_back(pool[static_cast<size_t>(m[static_cast<size_t>(k)])]);
      }
    }
  }
  std::sort(out.begin(), out.end(), pair_less);
  return out;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double train_ratio,
                                                            uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw RangeError("split: train ratio must be in (0, 1)");
  }
  std::vector<int> ids(static_cast<size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) ids[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(ids);
  const long long cut = std::llround(train_ratio * static_cast<double>(n));
  if (cut < 1 || cut >= n) {
    throw TooFewRows("split: " + std::to_string(n) + " rows at ratio " +
                     std::to_string(train_ratio) + " leaves an empty side");
  }
  std::pair<std::vector<int>, std::vector<int>> out;
  out.first.assign(ids.begin(), ids.begin() + static_cast<long>(cut));
  out.second.assign(ids.begin() + static_cast<long>(cut), ids.end());
  return out;
}

std::vector<PairRow> to_pair_rows(const std::vector<MoleculeRecord>& corpus,
                                  const std::vector<PairRecord>& pairs) {
  std::vector<PairRow> rows;
  rows.reserve(pairs.size());
  for (const PairRecord& p : pairs) {
    const MoleculeRecord& x = corpus[static_cast<size_t>(p.x)];
    const MoleculeRecord& y = corpus[static_cast<size_t>(p.y)];
    PairRow r;
    r.x_smiles = x.smiles;
    r.y_smiles = y.smiles;
    r.similarity = p.similarity;
    r.px = x.properties;
    r.py = y.properties;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<PairRow> to_labeled_rows(const std::vector<MoleculeRecord>& corpus,
                                     const std::vector<PairRecord>& pairs, double delta) {
  std::vector<PairRow> rows = to_pair_rows(corpus, pairs);
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].label = pairs[i].similarity >= delta ? 1 : 0;
  }
  return rows;
}

int audit_leakage(const std::vector<PairRow>& rows,
                  const std::vector<std::vector<std::string>>& holdouts) {
  const std::unordered_set<std::string> banned = holdout_union(holdouts);
  int violations = 0;
  for (const PairRow& r : rows) {
    if (banned.count(r.x_smiles) > 0 || banned.count(r.y_smiles) > 0) ++violations;
  }
  return violations;
}

}  // namespace molgen
