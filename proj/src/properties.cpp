// SPDX-License-Identifier: Apache-2.0

#include "molgen/properties.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "molgen/errors.hpp"

namespace molgen {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

PropertyScaler::PropertyScaler(const std::array<double, kNumProperties>& shift,
                               const std::array<double, kNumProperties>& scale)
    : shift_(shift), scale_(scale), fitted_(true) {
  for (double s : scale_) {
    if (!(s > 0.0)) throw RangeError("property scaler scale must be positive");
  }
}

PropertyScaler PropertyScaler::fit(const std::vector<PropertyVector>& corpus) {
  if (corpus.empty()) throw EmptyCorpus("cannot fit property scaler on empty corpus");
  PropertyScaler s;
  for (int d = 0; d < kNumProperties; ++d) {
    double mean = 0.0;
    for (const auto& p : corpus) mean += p[d];
    mean /= static_cast<double>(corpus.size());
    double var = 0.0;
    for (const auto& p : corpus) {
      const double diff = p[d] - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(corpus.size());
    s.shift_[d] = mean;
    // Floor keeps constant columns from producing a zero scale.
    s.scale_[d] = std::max(std::sqrt(var), 1e-9);
  }
  s.fitted_ = true;
  return s;
}

PropertyVector PropertyScaler::normalize(const PropertyVector& p) const {
  if (!fitted_) throw UnfittedScaler("normalize called before fit");
  PropertyVector out;
  for (int d = 0; d < kNumProperties; ++d) out[d] = (p[d] - shift_[d]) / scale_[d];
  return out;
}

PropertyVector PropertyScaler::denormalize(const PropertyVector& p) const {
  if (!fitted_) throw UnfittedScaler("denormalize called before fit");
  PropertyVector out;
  for (int d = 0; d < kNumProperties; ++d) out[d] = p[d] * scale_[d] + shift_[d];
  return out;
}

namespace {

double parse_real(const std::string& field, const std::string& path, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + field + "'");
  }
  return v;
}

}  // namespace

std::map<std::string, PropertyVector> load_properties(const std::string& path,
                                                      int* duplicate_warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open property file: " + path);
  std::map<std::string, PropertyVector> out;
  int duplicates = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (line_no == 1 && fields.size() == 4 && fields[0] == "smiles") continue;  // header
    if (fields.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    PropertyVector p;
    p.plogp = parse_real(fields[1], path, line_no);
    p.qed = parse_real(fields[2], path, line_no);
    p.drd2 = parse_real(fields[3], path, line_no);
    if (p.qed < 0.0 || p.qed > 1.0) {
      throw RangeError(path + ":" + std::to_string(line_no) + ": qed outside [0,1]");
    }
    if (p.drd2 < 0.0 || p.drd2 > 1.0) {
      throw RangeError(path + ":" + std::to_string(line_no) + ": drd2 outside [0,1]");
    }
    auto [it, inserted] = out.insert_or_assign(fields[0], p);
    (void)it;
    if (!inserted) ++duplicates;
  }
  if (duplicate_warnings) *duplicate_warnings = duplicates;
  return out;
}

PropertyVector surrogate_properties(const MolecularGraph& g) {
  if (g.atoms.empty()) throw EmptyGraph("surrogate properties need at least one atom");
  int carbons = 0;
  int n_plus_o = 0;
  int heavy = 0;
  int aromatic = 0;
  for (const auto& a : g.atoms) {
    if (a.element == "C") ++carbons;
    if (a.element == "N" || a.element == "O") ++n_plus_o;
    if (a.element != "H") ++heavy;
    if (a.aromatic) ++aromatic;
  }
  // Cyclomatic ring count: bonds - atoms + connected components.
  std::vector<int> parent(g.atoms.size());
  for (size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  int components = static_cast<int>(g.atoms.size());
  for (const auto& b : g.bonds) {
    const int ra = find(b.a);
    const int rb = find(b.b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  const int rings = static_cast<int>(g.bonds.size()) - static_cast<int>(g.atoms.size()) + components;

  PropertyVector p;
  p.plogp = 0.4 * carbons - 0.6 * n_plus_o - 0.3 * rings;
  p.qed = logistic(1.5 - 0.1 * std::abs(heavy - 25));
  p.drd2 = logistic(0.5 * aromatic - 4.0);
  return p;
}

}  // namespace molgen
