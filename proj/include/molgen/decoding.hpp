// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "molgen/chem.hpp"
#include "molgen/properties.hpp"
#include "molgen/training.hpp"
#include "molgen/translator.hpp"

namespace molgen {

// One finished decode: [BEGIN]...[END] framed tokens plus the cumulative
// log-likelihood of the emitted tokens (always <= 0).
struct BeamCandidate {
  TokenSequence tokens;
  double score = 0.0;

  bool operator==(const BeamCandidate&) const = default;
};

// Next-token log-probability source for the search. The production
// implementation wraps the translator; tests substitute fixed tables.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  // Log-probabilities over the token following `prefix` ([BEGIN]-led, no
  // [END]); the returned vector has vocab_size() entries.
  virtual std::vector<double> log_probs(const TokenSequence& prefix) = 0;
};

// Scorer over one encoded input. Property vectors are already normalized.
// Encodes once at construction; each log_probs call re-decodes the prefix.
class TranslatorScorer final : public StepScorer {
 public:
  TranslatorScorer(Translator& translator, const TokenSequence& x,
                   const PropertyVector& px_norm, const PropertyVector& py_norm);

  int vocab_size() const override;
  std::vector<double> log_probs(const TokenSequence& prefix) override;

 private:
  Translator& translator_;
  EncoderOutput enc_;
};

// Breadth-b search over per-token log-probabilities. Each step ranks every
// child of the live set by (score desc, tokens lexicographic asc) and keeps
// the best b; children emitting [END] retire to the finished pool, the rest
// stay live. [PAD] and [BEGIN] are never emitted, [END] directly after
// [BEGIN] is banned (the empty molecule is not a candidate), and children
// that can no longer fit an [END] within max_len framed tokens are dropped
// rather than force-terminated. Returns the finished pool sorted by
// (score desc, tokens asc), truncated to b. With b=1 this is greedy argmax
// decoding. Throws RangeError (b < 1) and NoCompleteCandidate.
std::vector<BeamCandidate> beam_search(StepScorer& scorer, int b, int max_len);

// Model-level wrapper: tokenizes x, normalizes both property vectors with the
// model's scaler and scores with the translator.
std::vector<BeamCandidate> beam_search(CmgModel& model, const std::string& x_smiles,
                                       const PropertyVector& px, const PropertyVector& py,
                                       int b, int max_len);

// A candidate with its constraint-network bonuses. The beam score is left
// untouched; the selection key is total().
struct RescoredCandidate {
  BeamCandidate candidate;
  double s_pn = 0.0;
  double s_sn = 0.0;
  // Predicted properties of the candidate, denormalized to raw units.
  PropertyVector predicted{};

  double total() const { return candidate.score + s_pn + s_sn; }
  bool operator==(const RescoredCandidate&) const = default;
};

// Callbacks over a candidate's unframed tokens (no [BEGIN], [END] kept):
// normalized property prediction, and similarity-to-input probability.
using PropertyFn = std::function<PropertyVector(const TokenSequence&)>;
using SimilarityFn = std::function<double(const TokenSequence&)>;

// Modified selection over a finished pool: for each candidate, s_pn is the
// mean over property entries of (1 - |p_y_norm - predicted|), s_sn the
// similarity probability, and the winner maximizes score + s_pn + s_sn.
// Both bonuses are computed in normalized property space. Ties break on
// lexicographic token order, so the result is invariant to input order.
// Throws EmptyCandidates.
std::vector<RescoredCandidate> rescore_candidates(const std::vector<BeamCandidate>& candidates,
                                                  const PropertyVector& p_y_norm,
                                                  const PropertyFn& property_fn,
                                                  const SimilarityFn& similarity_fn);
RescoredCandidate rescore_select(const std::vector<BeamCandidate>& candidates,
                                 const PropertyVector& p_y_norm, const PropertyFn& property_fn,
                                 const SimilarityFn& similarity_fn);

// Model-level wrappers: p_y arrives in raw units and is normalized with the
// model's scaler; predictions come from the frozen constraint networks on the
// candidates' hard tokens.
std::vector<RescoredCandidate> rescore_candidates(CmgModel& model,
                                                  const std::vector<BeamCandidate>& candidates,
                                                  const std::string& x_smiles,
                                                  const PropertyVector& p_y);
RescoredCandidate rescore_select(CmgModel& model, const std::vector<BeamCandidate>& candidates,
                                 const std::string& x_smiles, const PropertyVector& p_y);

// Per-property Gaussian jitter of the desired vector, in raw units.
struct DiversifyConfig {
  std::array<double, kNumProperties> sigma{0.0, 0.0, 0.0};
  int n_samples = 20;

  void validate() const;  // throws RangeError
};

// n_samples independent drafts of p_y with per-dimension noise N(0, sigma_k).
// Deterministic under a fixed seed; sigma = 0 copies p_y exactly.
std::vector<PropertyVector> diversify_targets(const PropertyVector& p_y,
                                              const DiversifyConfig& cfg, uint64_t seed);

// One generated molecule with its diagnostics. `complete` is false when no
// candidate finished for that jitter (the row is kept, not dropped).
struct GenerationRecord {
  std::string input_smiles;
  int jitter_index = 0;
  bool complete = false;
  std::string output_smiles;
  bool valid = false;           // output parses as a molecule
  double tanimoto = 0.0;        // fingerprint similarity to the input (0 unless valid)
  double s_beam = 0.0;
  double s_pn = 0.0;
  double s_sn = 0.0;
  PropertyVector predicted{};   // constraint-net property estimate, raw units

  bool operator==(const GenerationRecord&) const = default;
};

// Full generation for one input: jitter the desired vector n_samples times,
// beam-search each jittered target and keep the rescored winner. The source
// property vector comes from the deterministic surrogate oracle on x_smiles.
// Jitters run in parallel; records come back in jitter-index order. A
// NoCompleteCandidate for one jitter yields an incomplete record; every other
// error propagates. Throws RangeError (b < 1) and parse errors on x_smiles.
std::vector<GenerationRecord> generate(CmgModel& model, const std::string& x_smiles,
                                       const PropertyVector& p_y_base, const DiversifyConfig& cfg,
                                       int b, uint64_t seed);

// Generation table: input_smiles, jitter_index, output_smiles, valid,
// tanimoto, s_beam, s_pn, s_sn. Incomplete rows carry "-" as their output and
// read back as such. '#' lines and blank lines are ignored. Throws IoError
// and ParseError (with path:line).
void write_generation_tsv(const std::string& path, const std::vector<GenerationRecord>& records);
std::vector<GenerationRecord> read_generation_tsv(const std::string& path);

}  // namespace molgen
