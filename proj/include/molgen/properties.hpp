// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <string>

#include "molgen/chem.hpp"

namespace molgen {

constexpr int kNumProperties = 3;

// (plogp, qed, drd2). qed and drd2 live in [0,1]; plogp is unbounded.
struct PropertyVector {
  double plogp = 0.0;
  double qed = 0.0;
  double drd2 = 0.0;

  double& operator[](int i) { return i == 0 ? plogp : (i == 1 ? qed : drd2); }
  double operator[](int i) const { return i == 0 ? plogp : (i == 1 ? qed : drd2); }
  bool operator==(const PropertyVector&) const = default;
};

inline const char* property_name(int i) { return i == 0 ? "plogp" : (i == 1 ? "qed" : "drd2"); }

// Per-dimension affine normalization fitted on a corpus.
class PropertyScaler {
 public:
  PropertyScaler() = default;
  PropertyScaler(const std::array<double, kNumProperties>& shift,
                 const std::array<double, kNumProperties>& scale);

  // Mean/stddev fit; stddev is floored at 1e-9 to keep scale positive.
  static PropertyScaler fit(const std::vector<PropertyVector>& corpus);

  PropertyVector normalize(const PropertyVector& p) const;
  PropertyVector denormalize(const PropertyVector& p) const;
  bool fitted() const { return fitted_; }
  const std::array<double, kNumProperties>& shift() const { return shift_; }
  const std::array<double, kNumProperties>& scale() const { return scale_; }

 private:
  std::array<double, kNumProperties> shift_{};
  std::array<double, kNumProperties> scale_{};
  bool fitted_ = false;
};

// Property TSV: smiles<TAB>plogp<TAB>qed<TAB>drd2, optional header row,
// '#' comment lines ignored. Duplicate SMILES: last row wins; the duplicate
// count lands in *duplicate_warnings when given. Throws ParseError (with line
// number) and RangeError.
std::map<std::string, PropertyVector> load_properties(const std::string& path,
                                                      int* duplicate_warnings = nullptr);

// Deterministic desk-scale stand-ins computed from graph features; not the
// real chemistry scores. Throws EmptyGraph.
PropertyVector surrogate_properties(const MolecularGraph& g);

double logistic(double x);

}  // namespace molgen
