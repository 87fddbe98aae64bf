// SPDX-License-Identifier: Apache-2.0

#include "molgen/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>

#include "molgen/constraint_nets.hpp"
#include "molgen/errors.hpp"
#include "molgen/fingerprint.hpp"

namespace molgen {

namespace {

// Ranking used everywhere: higher score first, then lexicographically
// smaller tokens, so every selection is deterministic.
bool beam_less(const BeamCandidate& a, const BeamCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& field, const std::string& path, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + field + "'");
  }
  return v;
}

int parse_flag(const std::string& field, const std::string& path, int line_no,
               const char* what) {
  if (field != "0" && field != "1") {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what +
                     " must be 0 or 1, got '" + field + "'");
  }
  return field == "1" ? 1 : 0;
}

}  // namespace

TranslatorScorer::TranslatorScorer(Translator& translator, const TokenSequence& x,
                                   const PropertyVector& px_norm, const PropertyVector& py_norm)
    : translator_(translator), enc_(translator.encode(x, px_norm, py_norm)) {}

int TranslatorScorer::vocab_size() const { return translator_.config().V; }

std::vector<double> TranslatorScorer::log_probs(const TokenSequence& prefix) {
  const Tensor logits = translator_.decode_step(enc_, prefix);
  const int v = logits.cols;
  double max_logit = logits.v[0];
  for (int i = 1; i < v; ++i) max_logit = std::max(max_logit, logits.v[i]);
  double total = 0.0;
  for (int i = 0; i < v; ++i) total += std::exp(logits.v[i] - max_logit);
  const double log_z = max_logit + std::log(total);
  std::vector<double> out(static_cast<size_t>(v));
  for (int i = 0; i < v; ++i) out[static_cast<size_t>(i)] = logits.v[i] - log_z;
  return out;
}

std::vector<BeamCandidate> beam_search(StepScorer& scorer, int b, int max_len) {
  if (b < 1) throw RangeError("beam_search: width must be >= 1, got " + std::to_string(b));
  const int v = scorer.vocab_size();
  std::vector<BeamCandidate> live;
  live.push_back({TokenSequence{vocab::kBegin}, 0.0});
  std::vector<BeamCandidate> finished;

  while (!live.empty()) {
    std::vector<BeamCandidate> pool;
    for (const BeamCandidate& cand : live) {
      const std::vector<double> lp = scorer.log_probs(cand.tokens);
      const int len = static_cast<int>(cand.tokens.size());
      for (int tok = 0; tok < v; ++tok) {
        if (tok == vocab::kPad || tok == vocab::kBegin) continue;
        if (tok == vocab::kEnd) {
          // The empty molecule is not a candidate; the framed length cap
          // holds by construction (live prefixes leave room for [END]).
          if (len == 1) continue;
        } else {
          // A content child of length len+1 still needs an [END] later.
          if (len + 2 > max_len) continue;
        }
        BeamCandidate child;
        child.tokens = cand.tokens;
        child.tokens.push_back(tok);
        child.score = cand.score + lp[static_cast<size_t>(tok)];
        pool.push_back(std::move(child));
      }
    }
    const size_t keep = std::min<size_t>(static_cast<size_t>(b), pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<long>(keep), pool.end(), beam_less);
    live.clear();
    for (size_t i = 0; i < keep; ++i) {
      if (pool[i].tokens.back() == vocab::kEnd) {
        finished.push_back(std::move(pool[i]));
      } else {
        live.push_back(std::move(pool[i]));
      }
    }
  }

  if (finished.empty()) {
    throw NoCompleteCandidate("no candidate emitted [END] within " + std::to_string(max_len) +
                              " tokens");
  }
  std::sort(finished.begin(), finished.end(), beam_less);
  if (finished.size() > static_cast<size_t>(b)) finished.resize(static_cast<size_t>(b));
  return finished;
}

std::vector<BeamCandidate> beam_search(CmgModel& model, const std::string& x_smiles,
                                       const PropertyVector& px, const PropertyVector& py, int b,
                                       int max_len) {
  const TokenSequence x = tokenize(x_smiles, max_len);
  TranslatorScorer scorer(*model.translator, x, model.scaler.normalize(px),
                          model.scaler.normalize(py));
  return beam_search(scorer, b, max_len);
}

std::vector<RescoredCandidate> rescore_candidates(const std::vector<BeamCandidate>& candidates,
                                                  const PropertyVector& p_y_norm,
                                                  const PropertyFn& property_fn,
                                                  const SimilarityFn& similarity_fn) {
  if (candidates.empty()) throw EmptyCandidates("rescore: empty candidate list");
  std::vector<RescoredCandidate> out;
  out.reserve(candidates.size());
  for (const BeamCandidate& cand : candidates) {
    const TokenSequence seq = strip_begin(cand.tokens);
    const PropertyVector predicted = property_fn(seq);
    double s_pn = 0.0;
    for (int d = 0; d < kNumProperties; ++d) s_pn += 1.0 - std::abs(p_y_norm[d] - predicted[d]);
    s_pn /= kNumProperties;
    RescoredCandidate r;
    r.candidate = cand;
    r.s_pn = s_pn;
    r.s_sn = similarity_fn(seq);
    r.predicted = predicted;
    out.push_back(std::move(r));
  }
  return out;
}

RescoredCandidate rescore_select(const std::vector<BeamCandidate>& candidates,
                                 const PropertyVector& p_y_norm, const PropertyFn& property_fn,
                                 const SimilarityFn& similarity_fn) {
  const std::vector<RescoredCandidate> scored =
      rescore_candidates(candidates, p_y_norm, property_fn, similarity_fn);
  size_t best = 0;
  for (size_t i = 1; i < scored.size(); ++i) {
    const double a = scored[i].total();
    const double b = scored[best].total();
    if (a > b || (a == b && scored[i].candidate.tokens < scored[best].candidate.tokens)) {
      best = i;
    }
  }
  return scored[best];
}

namespace {

// Model-backed callbacks: hard tokens into the frozen nets, predictions in
// normalized space.
PropertyFn model_property_fn(CmgModel& model) {
  return [&model](const TokenSequence& seq) {
    const Tensor pred = model.propnet->forward({seq});
    PropertyVector p;
    for (int d = 0; d < kNumProperties; ++d) p[d] = pred.v[static_cast<size_t>(d)];
    return p;
  };
}

SimilarityFn model_similarity_fn(CmgModel& model, const TokenSequence& x_seq) {
  return [&model, x_seq](const TokenSequence& seq) {
    return model.simnet->forward_pair(x_seq, seq);
  };
}

}  // namespace

std::vector<RescoredCandidate> rescore_candidates(CmgModel& model,
                                                  const std::vector<BeamCandidate>& candidates,
                                                  const std::string& x_smiles,
                                                  const PropertyVector& p_y) {
  const TokenSequence x_seq =
      strip_begin(tokenize(x_smiles, model.translator->config().M));
  std::vector<RescoredCandidate> out =
      rescore_candidates(candidates, model.scaler.normalize(p_y), model_property_fn(model),
                         model_similarity_fn(model, x_seq));
  for (RescoredCandidate& r : out) r.predicted = model.scaler.denormalize(r.predicted);
  return out;
}

RescoredCandidate rescore_select(CmgModel& model, const std::vector<BeamCandidate>& candidates,
                                 const std::string& x_smiles, const PropertyVector& p_y) {
  const TokenSequence x_seq =
      strip_begin(tokenize(x_smiles, model.translator->config().M));
  RescoredCandidate r = rescore_select(candidates, model.scaler.normalize(p_y),
                                       model_property_fn(model), model_similarity_fn(model, x_seq));
  r.predicted = model.scaler.denormalize(r.predicted);
  return r;
}

void DiversifyConfig::validate() const {
  for (int d = 0; d < kNumProperties; ++d) {
    if (!(sigma[static_cast<size_t>(d)] >= 0.0)) {
      throw RangeError("diversify: sigma must be >= 0");
    }
  }
  if (n_samples < 1) throw RangeError("diversify: n_samples must be >= 1");
}

std::vector<PropertyVector> diversify_targets(const PropertyVector& p_y,
                                              const DiversifyConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::vector<PropertyVector> out(static_cast<size_t>(cfg.n_samples), p_y);
  for (PropertyVector& p : out) {
    for (int d = 0; d < kNumProperties; ++d) {
      const double sigma = cfg.sigma[static_cast<size_t>(d)];
      if (sigma > 0.0) p[d] += sigma * rng.normal();
    }
  }
  return out;
}

std::vector<GenerationRecord> generate(CmgModel& model, const std::string& x_smiles,
                                       const PropertyVector& p_y_base, const DiversifyConfig& cfg,
                                       int b, uint64_t seed) {
  if (b < 1) throw RangeError("generate: beam width must be >= 1, got " + std::to_string(b));
  const int max_len = model.translator->config().M;
  const TokenSequence x = tokenize(x_smiles, max_len);
  const PropertyVector px = surrogate_properties(parse_graph(x_smiles));
  const Fingerprint x_fp = morgan_fingerprint(parse_graph(x_smiles));
  const std::vector<PropertyVector> targets = diversify_targets(p_y_base, cfg, seed);

  const int n = static_cast<int>(targets.size());
  std::vector<GenerationRecord> records(static_cast<size_t>(n));
  std::exception_ptr first_error = nullptr;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    GenerationRecord rec;
    rec.input_smiles = x_smiles;
    rec.jitter_index = i;
    try {
      const PropertyVector& target = targets[static_cast<size_t>(i)];
      TranslatorScorer scorer(*model.translator, x, model.scaler.normalize(px),
                              model.scaler.normalize(target));
      const std::vector<BeamCandidate> pool = beam_search(scorer, b, max_len);
      const RescoredCandidate pick = rescore_select(model, pool, x_smiles, target);
      rec.complete = true;
      rec.output_smiles = detokenize(pick.candidate.tokens);
      rec.s_beam = pick.candidate.score;
      rec.s_pn = pick.s_pn;
      rec.s_sn = pick.s_sn;
      rec.predicted = pick.predicted;
      rec.valid = validate(rec.output_smiles);
      if (rec.valid) {
        bool degenerate = false;
        const Fingerprint out_fp = morgan_fingerprint(parse_graph(rec.output_smiles));
        rec.tanimoto = tanimoto(x_fp, out_fp, &degenerate);
      }
    } catch (const NoCompleteCandidate&) {
      rec = GenerationRecord{};
      rec.input_smiles = x_smiles;
      rec.jitter_index = i;
    } catch (...) {
#pragma omp critical(molgen_generate_error)
      if (!first_error) first_error = std::current_exception();
    }
    records[static_cast<size_t>(i)] = std::move(rec);
  }

  if (first_error) std::rethrow_exception(first_error);
  return records;
}

void write_generation_tsv(const std::string& path, const std::vector<GenerationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open generation file for writing: " + path);
  out << "# input_smiles\tjitter_index\toutput_smiles\tvalid\ttanimoto\ts_beam\ts_pn\ts_sn\n";
  for (const GenerationRecord& r : records) {
    out << r.input_smiles << '\t' << r.jitter_index << '\t'
        << (r.complete ? r.output_smiles : std::string("-")) << '\t' << (r.valid ? 1 : 0) << '\t'
        << fmt_double(r.tanimoto) << '\t' << fmt_double(r.s_beam) << '\t' << fmt_double(r.s_pn)
        << '\t' << fmt_double(r.s_sn) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<GenerationRecord> read_generation_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open generation file: " + path);
  std::vector<GenerationRecord> records;
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
    if (fields.size() != 8) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 8 tab-separated fields, got " + std::to_string(fields.size()));
    }
    GenerationRecord r;
    r.input_smiles = fields[0];
    const long idx = std::strtol(fields[1].c_str(), nullptr, 10);
    if (idx < 0 || fields[1].empty() ||
        fields[1].find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad jitter index '" + fields[1] +
                       "'");
    }
    r.jitter_index = static_cast<int>(idx);
    r.complete = fields[2] != "-";
    if (r.complete) r.output_smiles = fields[2];
    r.valid = parse_flag(fields[3], path, line_no, "valid") == 1;
    r.tanimoto = parse_real(fields[4], path, line_no);
    r.s_beam = parse_real(fields[5], path, line_no);
    r.s_pn = parse_real(fields[6], path, line_no);
    r.s_sn = parse_real(fields[7], path, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace molgen
