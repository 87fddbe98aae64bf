// SPDX-License-Identifier: Apache-2.0

#include "molgen/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <utility>

#include "molgen/errors.hpp"
#include "molgen/rng.hpp"

namespace molgen {

int Fingerprint::popcount() const {
  int n = 0;
  for (uint64_t w : words) n += std::popcount(w);
  return n;
}

std::vector<int> Fingerprint::bits() const {
  std::vector<int> out;
  for (int pos = 0; pos < n_bits; ++pos) {
    if (test(pos)) out.push_back(pos);
  }
  return out;
}

Fingerprint Fingerprint::from_bits(int n_bits, const std::vector<int>& positions, int radius) {
  Fingerprint fp;
  fp.n_bits = n_bits;
  fp.radius = radius;
  fp.words.assign((static_cast<size_t>(n_bits) + 63) / 64, 0);
  for (int pos : positions) fp.set(pos);
  return fp;
}

namespace {

uint64_t initial_invariant(const Atom& atom, int degree) {
  uint64_t h = fnv1a64_str(atom.element);
  h = hash_combine64(h, atom.aromatic ? 1 : 0);
  h = hash_combine64(h, static_cast<uint64_t>(static_cast<int64_t>(atom.charge) + 16));
  h = hash_combine64(h, static_cast<uint64_t>(atom.explicit_h));
  h = hash_combine64(h, static_cast<uint64_t>(degree));
  return h;
}

}  // namespace

Fingerprint morgan_fingerprint(const MolecularGraph& g, int radius, int n_bits) {
  if (g.atoms.empty()) throw EmptyGraph("morgan_fingerprint: empty graph");
  if (n_bits <= 0 || (n_bits & (n_bits - 1)) != 0) {
    throw RangeError("morgan_fingerprint: n_bits must be a power of two");
  }

  const int n = static_cast<int>(g.atoms.size());
  struct Edge {
    int nbr;
    int bond;
    int code;
  };
  std::vector<std::vector<Edge>> adj(n);
  for (size_t bi = 0; bi < g.bonds.size(); ++bi) {
    const Bond& b = g.bonds[bi];
    const int code = static_cast<int>(b.order);
    adj[b.a].push_back({b.b, static_cast<int>(bi), code});
    adj[b.b].push_back({b.a, static_cast<int>(bi), code});
  }

  // Graph distances, for delimiting each (atom, round) environment.
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int src = 0; src < n; ++src) {
    std::vector<int> queue{src};
    dist[src][src] = 0;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const int u = queue[qi];
      for (const Edge& e : adj[u]) {
        if (dist[src][e.nbr] < 0) {
          dist[src][e.nbr] = dist[src][u] + 1;
          queue.push_back(e.nbr);
        }
      }
    }
  }

  std::vector<uint64_t> inv(n);
  for (int i = 0; i < n; ++i) {
    inv[i] = initial_invariant(g.atoms[i], static_cast<int>(adj[i].size()));
  }

  // One identifier per distinct environment. The environment of (atom, round)
  // is the induced subgraph reached within `round` steps; when several
  // (atom, round) pairs cover the same subgraph, the earliest round wins and
  // hash value breaks the remaining ties, so the result is independent of
  // atom labeling.
  using EnvKey = std::pair<std::vector<int>, std::vector<int>>;
  std::map<EnvKey, std::pair<int, uint64_t>> kept;
  auto offer = [&](int atom, int round, uint64_t id) {
    EnvKey key;
    for (int u = 0; u < n; ++u) {
      if (dist[atom][u] >= 0 && dist[atom][u] <= round) key.first.push_back(u);
    }
    for (size_t bi = 0; bi < g.bonds.size(); ++bi) {
      const int da = dist[atom][g.bonds[bi].a];
      const int db = dist[atom][g.bonds[bi].b];
      if (da < 0 || db < 0) continue;
      if (std::min(da, db) <= round - 1 && std::max(da, db) <= round) {
        key.second.push_back(static_cast<int>(bi));
      }
    }
    auto it = kept.find(key);
    if (it == kept.end() || std::pair(round, id) < it->second) {
      kept[key] = {round, id};
    }
  };

  for (int i = 0; i < n; ++i) offer(i, 0, hash_combine64(0, inv[i]));

  std::vector<uint64_t> next(n);
  for (int round = 1; round <= radius; ++round) {
    for (int i = 0; i < n; ++i) {
      // Sorted (bond order, neighbor invariant) pairs make the rehash
      // independent of input ordering.
      std::vector<std::pair<int, uint64_t>> env;
      env.reserve(adj[i].size());
      for (const Edge& e : adj[i]) env.emplace_back(e.code, inv[e.nbr]);
      std::sort(env.begin(), env.end());
      uint64_t h = hash_combine64(static_cast<uint64_t>(round), inv[i]);
      for (const auto& [code, nbr_inv] : env) {
        h = hash_combine64(h, static_cast<uint64_t>(code));
        h = hash_combine64(h, nbr_inv);
      }
      next[i] = h;
      offer(i, round, hash_combine64(static_cast<uint64_t>(round), h));
    }
    inv.swap(next);
  }

  std::vector<uint64_t> identifiers;
  identifiers.reserve(kept.size());
  for (const auto& [key, entry] : kept) identifiers.push_back(entry.second);
  std::sort(identifiers.begin(), identifiers.end());
  identifiers.erase(std::unique(identifiers.begin(), identifiers.end()), identifiers.end());

  Fingerprint fp;
  fp.n_bits = n_bits;
  fp.radius = radius;
  fp.words.assign((static_cast<size_t>(n_bits) + 63) / 64, 0);
  for (uint64_t id : identifiers) {
    fp.set(static_cast<int>(id & static_cast<uint64_t>(n_bits - 1)));
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b, bool* degenerate) {
  if (a.n_bits != b.n_bits) {
    throw WidthMismatch("tanimoto: widths " + std::to_string(a.n_bits) + " vs " +
                        std::to_string(b.n_bits));
  }
  int inter = 0;
  int uni = 0;
  for (size_t i = 0; i < a.words.size(); ++i) {
    inter += std::popcount(a.words[i] & b.words[i]);
    uni += std::popcount(a.words[i] | b.words[i]);
  }
  if (degenerate) *degenerate = (uni == 0);
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace molgen
