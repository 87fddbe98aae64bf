// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "molgen/decoding.hpp"
#include "molgen/pipeline.hpp"
#include "molgen/properties.hpp"

namespace molgen {

// Multi-objective success thresholds. Everything but drd2 is inclusive;
// drd2 must strictly exceed its bound.
struct MooCriteria {
  double delta = 0.4;
  double min_plogp_gain = 1.0;
  double min_qed = 0.9;
  double min_drd2 = 0.5;
};

// True iff tanimoto(x, y) >= delta, y.plogp - x.plogp >= min_plogp_gain,
// y.qed >= min_qed and y.drd2 > min_drd2 (strict). Throws MissingProperties
// when either record lacks its cached fingerprint.
bool moo_success(const MoleculeRecord& x, const MoleculeRecord& y, const MooCriteria& c);

// One scored output molecule. Properties and fingerprint are filled only for
// valid outputs and always come from re-scoring the molecule text, never
// from generation-time diagnostics.
struct ScoredOutput {
  std::string smiles;
  bool valid = false;
  double tanimoto = 0.0;  // to the input
  PropertyVector properties{};
  Fingerprint fingerprint;
};

// All outputs generated for one input, grouped by first appearance.
struct GenerationResult {
  std::string input_smiles;
  PropertyVector input_properties{};
  Fingerprint input_fingerprint;
  std::vector<ScoredOutput> outputs;
};

// Groups generation rows by input and re-scores everything with the
// deterministic surrogate oracle: validity by parsing, Tanimoto and
// properties from the molecule strings. Incomplete rows become invalid
// outputs. Parse errors on input molecules propagate.
std::vector<GenerationResult> score_generation(const std::vector<GenerationRecord>& records);

// Per input, the best increment of property k among valid outputs meeting
// the similarity bar (inputs with none contribute 0); returns the population
// mean and standard deviation over inputs. Throws RangeError (bad property
// index) and EmptyCorpus.
std::pair<double, double> metric_improvement(const std::vector<GenerationResult>& results,
                                             int property_index, double delta);

// Per input, the mean pairwise Tanimoto distance (1 - similarity) among its
// distinct valid outputs meeting the similarity bar, 0 when fewer than two
// qualify; averaged over inputs. Throws EmptyCorpus.
double metric_diversity(const std::vector<GenerationResult>& results, double delta);

// Percentage of inputs with at least one output passing moo_success.
// Throws EmptyCorpus.
double metric_moo_success_rate(const std::vector<GenerationResult>& results,
                               const MooCriteria& criteria);

// Desired-property grammar: per property either keep (copy the input's
// value), an absolute assignment, or a signed offset.
struct TargetSpec {
  enum class Mode { kKeep, kAbsolute, kRelative };
  Mode mode = Mode::kKeep;
  double value = 0.0;

  bool operator==(const TargetSpec&) const = default;
};

struct TargetVector {
  std::array<TargetSpec, kNumProperties> spec{};

  bool operator==(const TargetVector&) const = default;
};

// Parses "plogp+1,qed=keep,drd2=0.5"-style lists: entries are
// <name>=keep | <name>=<value> | <name>+<value> | <name>-<value>, separated
// by commas; omitted properties keep the input's value; duplicate names are
// rejected. Throws ParseError.
TargetVector parse_target(const std::string& text);

// Applies a target to one input's property vector.
PropertyVector resolve_target(const TargetVector& target, const PropertyVector& px);

}  // namespace molgen
