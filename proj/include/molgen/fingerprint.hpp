// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "molgen/chem.hpp"

namespace molgen {

// Fixed-width bit set from circular invariant hashing. Stored as packed words
// so similarity mining can use popcount; bits() recovers the sorted positions.
struct Fingerprint {
  int n_bits = 0;
  int radius = 0;
  std::vector<uint64_t> words;

  bool test(int pos) const { return (words[pos >> 6] >> (pos & 63)) & 1ULL; }
  void set(int pos) { words[pos >> 6] |= 1ULL << (pos & 63); }
  int popcount() const;
  std::vector<int> bits() const;
  bool operator==(const Fingerprint& other) const = default;

  static Fingerprint from_bits(int n_bits, const std::vector<int>& positions, int radius = 0);
};

constexpr int kDefaultFpRadius = 2;
constexpr int kDefaultFpBits = 2048;

// Circular (ECFP-style) fingerprint. Atom invariants are seeded from
// (element, aromatic, charge, H-count, degree) and iterated radius times over
// the sorted (bond order, neighbor invariant) lists; every per-round
// identifier folds into the bit set modulo n_bits. Uses a fixed 64-bit mixer,
// so the result is identical across runs and platforms and invariant under
// atom relabeling. Throws EmptyGraph; n_bits must be a power of two.
Fingerprint morgan_fingerprint(const MolecularGraph& g, int radius = kDefaultFpRadius,
                               int n_bits = kDefaultFpBits);

// |a & b| / |a | b|. Both-empty is degenerate: returns 0 and sets the flag.
// Throws WidthMismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b, bool* degenerate = nullptr);

}  // namespace molgen
