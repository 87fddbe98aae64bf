// SPDX-License-Identifier: Apache-2.0

#include "molgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>

#include "molgen/errors.hpp"

namespace molgen {

bool moo_success(const MoleculeRecord& x, const MoleculeRecord& y, const MooCriteria& c) {
  if (x.fingerprint.n_bits == 0 || y.fingerprint.n_bits == 0) {
    throw MissingProperties("moo_success: record lacks cached descriptors");
  }
  if (tanimoto(x.fingerprint, y.fingerprint) < c.delta) return false;
  if (y.properties.plogp - x.properties.plogp < c.min_plogp_gain) return false;
  if (y.properties.qed < c.min_qed) return false;
  return y.properties.drd2 > c.min_drd2;
}

std::vector<GenerationResult> score_generation(const std::vector<GenerationRecord>& records) {
  std::vector<GenerationResult> results;
  std::map<std::string, size_t> index;
  for (const GenerationRecord& rec : records) {
    const auto it = index.find(rec.input_smiles);
    size_t slot;
    if (it == index.end()) {
      slot = results.size();
      index.emplace(rec.input_smiles, slot);
      GenerationResult r;
      r.input_smiles = rec.input_smiles;
      const MolecularGraph g = parse_graph(rec.input_smiles);
      r.input_properties = surrogate_properties(g);
      r.input_fingerprint = morgan_fingerprint(g);
      results.push_back(std::move(r));
    } else {
      slot = it->second;
    }
    ScoredOutput o;
    if (rec.complete) o.smiles = rec.output_smiles;
    o.valid = rec.complete && validate(o.smiles);
    if (o.valid) {
      const MolecularGraph g = parse_graph(o.smiles);
      o.properties = surrogate_properties(g);
      o.fingerprint = morgan_fingerprint(g);
      o.tanimoto = tanimoto(results[slot].input_fingerprint, o.fingerprint);
    }
    results[slot].outputs.push_back(std::move(o));
  }
  return results;
}

std::pair<double, double> metric_improvement(const std::vector<GenerationResult>& results,
                                             int property_index, double delta) {
  if (property_index < 0 || property_index >= kNumProperties) {
    throw RangeError("metric_improvement: property index must be in [0, " +
                     std::to_string(kNumProperties) + ")");
  }
  if (results.empty()) throw EmptyCorpus("metric_improvement: no inputs");
  std::vector<double> increments;
  increments.reserve(results.size());
  for (const GenerationResult& r : results) {
    double best = -std::numeric_limits<double>::infinity();
    for (const ScoredOutput& o : r.outputs) {
      if (!o.valid || o.tanimoto < delta) continue;
      best = std::max(best, o.properties[property_index] - r.input_properties[property_index]);
    }
    increments.push_back(std::isinf(best) ? 0.0 : best);
  }
  double mean = 0.0;
  for (double x : increments) mean += x;
  mean /= static_cast<double>(increments.size());
  double var = 0.0;
  for (double x : increments) var += (x - mean) * (x - mean);
  var /= static_cast<double>(increments.size());
  return {mean, std::sqrt(var)};
}

double metric_diversity(const std::vector<GenerationResult>& results, double delta) {
  if (results.empty()) throw EmptyCorpus("metric_diversity: no inputs");
  double total = 0.0;
  for (const GenerationResult& r : results) {
    std::vector<const ScoredOutput*> qualifying;
    std::set<std::string> seen;
    for (const ScoredOutput& o : r.outputs) {
      if (!o.valid || o.tanimoto < delta) continue;
      if (!seen.insert(o.smiles).second) continue;
      qualifying.push_back(&o);
    }
    if (qualifying.size() < 2) continue;  // contributes 0
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < qualifying.size(); ++i) {
      for (size_t j = i + 1; j < qualifying.size(); ++j) {
        sum += 1.0 - tanimoto(qualifying[i]->fingerprint, qualifying[j]->fingerprint);
        ++pairs;
      }
    }
    total += sum / static_cast<double>(pairs);
  }
  return total / static_cast<double>(results.size());
}

double metric_moo_success_rate(const std::vector<GenerationResult>& results,
                               const MooCriteria& criteria) {
  if (results.empty()) throw EmptyCorpus("metric_moo_success_rate: no inputs");
  int winners = 0;
  for (const GenerationResult& r : results) {
    MoleculeRecord x;
    x.smiles = r.input_smiles;
    x.properties = r.input_properties;
    x.fingerprint = r.input_fingerprint;
    bool any = false;
    for (const ScoredOutput& o : r.outputs) {
      if (!o.valid) continue;
      MoleculeRecord y;
      y.smiles = o.smiles;
      y.properties = o.properties;
      y.fingerprint = o.fingerprint;
      if (moo_success(x, y, criteria)) {
        any = true;
        break;
      }
    }
    if (any) ++winners;
  }
  return 100.0 * static_cast<double>(winners) / static_cast<double>(results.size());
}

namespace {

int property_by_name(const std::string& name) {
  for (int d = 0; d < kNumProperties; ++d) {
    if (name == property_name(d)) return d;
  }
  return -1;
}

double parse_target_value(const std::string& text, const std::string& entry) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError("target entry '" + entry + "': bad value '" + text + "'");
  }
  return v;
}

}  // namespace

TargetVector parse_target(const std::string& text) {
  TargetVector out;
  std::array<bool, kNumProperties> seen{};
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string entry = text.substr(pos, comma - pos);
    pos = comma + 1;
    // Trim surrounding spaces.
    const size_t first = entry.find_first_not_of(" \t");
    if (first == std::string::npos) {
      if (text.empty()) break;
      throw ParseError("target: empty entry");
    }
    entry = entry.substr(first, entry.find_last_not_of(" \t") - first + 1);

    const size_t op = entry.find_first_of("=+-");
    if (op == std::string::npos || op == 0) {
      throw ParseError("target entry '" + entry + "': expected <property>(=|+|-)<value>");
    }
    const std::string name = entry.substr(0, op);
    const int d = property_by_name(name);
    if (d < 0) throw ParseError("target entry '" + entry + "': unknown property '" + name + "'");
    if (seen[static_cast<size_t>(d)]) {
      throw ParseError("target entry '" + entry + "': duplicate property '" + name + "'");
    }
    seen[static_cast<size_t>(d)] = true;

    TargetSpec& spec = out.spec[static_cast<size_t>(d)];
    const std::string rest = entry.substr(op + 1);
    if (entry[op] == '=') {
      if (rest == "keep") {
        spec.mode = TargetSpec::Mode::kKeep;
      } else {
        spec.mode = TargetSpec::Mode::kAbsolute;
        spec.value = parse_target_value(rest, entry);
      }
    } else {
      spec.mode = TargetSpec::Mode::kRelative;
      const double mag = parse_target_value(rest, entry);
      spec.value = entry[op] == '+' ? mag : -mag;
    }
  }
  return out;
}

PropertyVector resolve_target(const TargetVector& target, const PropertyVector& px) {
  PropertyVector out;
  for (int d = 0; d < kNumProperties; ++d) {
    const TargetSpec& spec = target.spec[static_cast<size_t>(d)];
    switch (spec.mode) {
      case TargetSpec::Mode::kKeep:
        out[d] = px[d];
        break;
      case TargetSpec::Mode::kAbsolute:
        out[d] = spec.value;
        break;
      case TargetSpec::Mode::kRelative:
        out[d] = px[d] + spec.value;
        break;
    }
  }
  return out;
}

}  // namespace molgen
