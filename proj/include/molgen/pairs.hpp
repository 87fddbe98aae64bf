// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molgen/properties.hpp"

namespace molgen {

// One serialized molecule pair: the translation direction is x -> y.
// `label` is -1 when the file carries no label column (translation corpora)
// and 0/1 for similarity-classifier corpora.
struct PairRow {
  std::string x_smiles;
  std::string y_smiles;
  double similarity = 0.0;
  PropertyVector px{};
  PropertyVector py{};
  int label = -1;

  bool operator==(const PairRow&) const = default;
};

// Provenance header carried as comments at the top of every pair file.
struct PairFileMeta {
  uint64_t cfg_hash = 0;
  uint64_t seed = 0;
};

// Tab-separated columns: x_smiles y_smiles similarity px1 px2 px3 py1 py2 py3
// and, when with_label, a trailing label column. Doubles round-trip exactly.
void write_pairs_tsv(const std::string& path, const std::vector<PairRow>& rows,
                     const PairFileMeta& meta, bool with_label);

// Throws IoError and ParseError (with path:line). Mixed presence/absence of
// the label column is a ParseError. Meta lands in *meta when given.
std::vector<PairRow> read_pairs_tsv(const std::string& path, PairFileMeta* meta = nullptr);

}  // namespace molgen
