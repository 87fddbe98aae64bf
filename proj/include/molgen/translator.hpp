// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <string>
#include <vector>

#include "molgen/checkpoint.hpp"
#include "molgen/chem.hpp"
#include "molgen/properties.hpp"
#include "molgen/tensor.hpp"

namespace molgen {

// Encoder-decoder dimensions. The encoder output is widened to d + 2k by
// concatenating the source and target property vectors at every position.
struct TranslatorConfig {
  int d = 64;
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ff = 128;
  int V = 0;  // 0: filled from the compiled vocabulary
  int M = 64;
  int k = kNumProperties;

  void validate() const;  // throws ConfigMismatch
  int enriched_width() const { return d + 2 * k; }
  void to_config(KvConfig& cfg, const std::string& prefix) const;
  static TranslatorConfig from_config(const KvConfig& cfg, const std::string& prefix);
};

// Encoder result for one input: per-token vectors of width d + 2k.
struct EncoderOutput {
  Tensor z;
};

// Projection weights for one attention block.
struct AttentionParams {
  Parameter* wq = nullptr;
  Parameter* bq = nullptr;
  Parameter* wk = nullptr;
  Parameter* bk = nullptr;
  Parameter* wv = nullptr;
  Parameter* bv = nullptr;
  Parameter* wo = nullptr;
  Parameter* bo = nullptr;
};

// Scaled dot-product attention over tape nodes: queries from q_in, keys and
// values from kv_in, additive mask (0 = allowed, large negative = banned).
// Per-head attention probabilities land in *probs_out when given.
int multi_head_attention(Tape& t, const AttentionParams& p, int q_in, int kv_in,
                         const Tensor& mask, int heads,
                         std::vector<Tensor>* probs_out = nullptr);

// Property-conditioned sequence-to-sequence Transformer: character
// embeddings + sinusoidal positions, post-norm residual blocks, tanh
// feed-forward, and cross-attention that reads the enriched d+2k encodings
// directly.
class Translator {
 public:
  Translator(const TranslatorConfig& cfg, Rng& rng);

  const TranslatorConfig& config() const { return cfg_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;

  // Graph builders (for training). Sequences carry [BEGIN]...[END] framing.
  // encode_graph returns a [T x d+2k] node; decode_graph returns [Tdec x V]
  // logits for teacher-forced next-token prediction over dec_input.
  int encode_graph(Tape& t, const TokenSequence& x, const PropertyVector& px_norm,
                   const PropertyVector& py_norm);
  int decode_graph(Tape& t, int enc_node, const TokenSequence& dec_input);

  // Inference wrappers over throwaway tapes.
  EncoderOutput encode(const TokenSequence& x, const PropertyVector& px_norm,
                       const PropertyVector& py_norm);
  // Logits [1 x V] for the token following `prefix` (which starts at [BEGIN]).
  Tensor decode_step(const EncoderOutput& enc, const TokenSequence& prefix);

  Parameter& param(const std::string& name);  // throws ConfigMismatch if absent

 private:
  struct FeedForward {
    Parameter* w1 = nullptr;
    Parameter* b1 = nullptr;
    Parameter* w2 = nullptr;
    Parameter* b2 = nullptr;
  };
  struct EncLayer {
    AttentionParams attn;
    FeedForward ff;
  };
  struct DecLayer {
    AttentionParams self_attn;
    AttentionParams cross_attn;
    FeedForward ff;
  };

  Parameter& add_param(Parameter p);
  AttentionParams make_attention(const std::string& prefix, int kv_width, Rng& rng);
  FeedForward make_ff(const std::string& prefix, Rng& rng);
  int embed_tokens(Tape& t, const TokenSequence& tokens);
  int ff_block(Tape& t, const FeedForward& ff, int x);

  TranslatorConfig cfg_;
  std::deque<Parameter> store_;
  Parameter* embed_ = nullptr;
  std::vector<EncLayer> enc_;
  std::vector<DecLayer> dec_;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
};

// Teacher-forced cross entropy, summed over every non-pad target position and
// divided by the number of such positions. logit_nodes[i] is [Ti x V]; row j
// predicts targets[i][j]. Throws ShapeMismatch.
int translation_loss_graph(Tape& t, const std::vector<int>& logit_nodes,
                           const std::vector<TokenSequence>& targets);

// Decoder input/target split for teacher forcing: input drops the final
// token, target drops [BEGIN].
TokenSequence teacher_input(const TokenSequence& full);
TokenSequence teacher_target(const TokenSequence& full);

// Additive causal mask: position j may attend to positions <= j.
Tensor causal_mask(int n);

}  // namespace molgen
