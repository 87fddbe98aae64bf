// SPDX-License-Identifier: Apache-2.0

#include "molgen/translator.hpp"

#include <cmath>

#include "molgen/errors.hpp"

namespace molgen {

namespace {

constexpr double kMaskValue = -1e9;

}  // namespace

void TranslatorConfig::validate() const {
  if (d <= 0 || heads <= 0 || d % heads != 0) {
    throw ConfigMismatch("translator: d must be positive and divisible by heads");
  }
  if (enc_layers <= 0 || dec_layers <= 0 || ff <= 0) {
    throw ConfigMismatch("translator: layer and ff sizes must be positive");
  }
  if (M < 3) throw ConfigMismatch("translator: M must be at least 3");
  if (k != kNumProperties) throw ConfigMismatch("translator: property count must be 3");
  if (V <= 0) throw ConfigMismatch("translator: vocabulary size must be positive");
}

void TranslatorConfig::to_config(KvConfig& cfg, const std::string& prefix) const {
  cfg[prefix + "d"] = std::to_string(d);
  cfg[prefix + "heads"] = std::to_string(heads);
  cfg[prefix + "enc_layers"] = std::to_string(enc_layers);
  cfg[prefix + "dec_layers"] = std::to_string(dec_layers);
  cfg[prefix + "ff"] = std::to_string(ff);
  cfg[prefix + "V"] = std::to_string(V);
  cfg[prefix + "M"] = std::to_string(M);
  cfg[prefix + "k"] = std::to_string(k);
}

TranslatorConfig TranslatorConfig::from_config(const KvConfig& cfg, const std::string& prefix) {
  TranslatorConfig out;
  out.d = config_int(cfg, prefix + "d");
  out.heads = config_int(cfg, prefix + "heads");
  out.enc_layers = config_int(cfg, prefix + "enc_layers");
  out.dec_layers = config_int(cfg, prefix + "dec_layers");
  out.ff = config_int(cfg, prefix + "ff");
  out.V = config_int(cfg, prefix + "V");
  out.M = config_int(cfg, prefix + "M");
  out.k = config_int(cfg, prefix + "k");
  out.validate();
  return out;
}

Tensor causal_mask(int n) {
  Tensor m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m.at(i, j) = kMaskValue;
  return m;
}

int multi_head_attention(Tape& t, const AttentionParams& p, int q_in, int kv_in,
                         const Tensor& mask, int heads, std::vector<Tensor>* probs_out) {
  const int d = p.wq->value.cols;
  if (d % heads != 0) throw ShapeMismatch("attention: width not divisible by head count");
  const int dh = d / heads;
  const int q = t.add(t.matmul(q_in, t.leaf(*p.wq)), t.leaf(*p.bq));
  const int k = t.add(t.matmul(kv_in, t.leaf(*p.wk)), t.leaf(*p.bk));
  const int v = t.add(t.matmul(kv_in, t.leaf(*p.wv)), t.leaf(*p.bv));
  const Tensor& qv = t.value(q);
  const Tensor& kv = t.value(k);
  if (mask.rows != qv.rows || mask.cols != kv.rows) {
    throw ShapeMismatch("attention mask " + mask.shape_str() + " vs scores [" +
                        std::to_string(qv.rows) + "x" + std::to_string(kv.rows) + "]");
  }
  const int mask_node = t.constant(mask);
  std::vector<int> heads_out;
  heads_out.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const int qh = t.slice(q, 1, h * dh, dh);
    const int kh = t.slice(k, 1, h * dh, dh);
    const int vh = t.slice(v, 1, h * dh, dh);
    const int scores = t.scale(t.matmul(qh, t.transpose(kh)), 1.0 / std::sqrt(dh));
    const int probs = t.softmax(t.add(scores, mask_node));
    if (probs_out) probs_out->push_back(t.value(probs));
    heads_out.push_back(t.matmul(probs, vh));
  }
  const int ctx = heads == 1 ? heads_out[0] : t.concat(heads_out, 1);
  return t.add(t.matmul(ctx, t.leaf(*p.wo)), t.leaf(*p.bo));
}

Parameter& Translator::add_param(Parameter p) {
  store_.push_back(std::move(p));
  return store_.back();
}

AttentionParams Translator::make_attention(const std::string& prefix, int kv_width, Rng& rng) {
  AttentionParams a;
  a.wq = &add_param(make_matrix_param(prefix + ".wq", cfg_.d, cfg_.d, rng));
  a.bq = &add_param(make_bias_param(prefix + ".bq", cfg_.d));
  a.wk = &add_param(make_matrix_param(prefix + ".wk", kv_width, cfg_.d, rng));
  a.bk = &add_param(make_bias_param(prefix + ".bk", cfg_.d));
  a.wv = &add_param(make_matrix_param(prefix + ".wv", kv_width, cfg_.d, rng));
  a.bv = &add_param(make_bias_param(prefix + ".bv", cfg_.d));
  a.wo = &add_param(make_matrix_param(prefix + ".wo", cfg_.d, cfg_.d, rng));
  a.bo = &add_param(make_bias_param(prefix + ".bo", cfg_.d));
  return a;
}

Translator::FeedForward Translator::make_ff(const std::string& prefix, Rng& rng) {
  FeedForward f;
  f.w1 = &add_param(make_matrix_param(prefix + ".w1", cfg_.d, cfg_.ff, rng));
  f.b1 = &add_param(make_bias_param(prefix + ".b1", cfg_.ff));
  f.w2 = &add_param(make_matrix_param(prefix + ".w2", cfg_.ff, cfg_.d, rng));
  f.b2 = &add_param(make_bias_param(prefix + ".b2", cfg_.d));
  return f;
}

Translator::Translator(const TranslatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.V == 0) cfg_.V = vocab::size();
  cfg_.validate();
  embed_ = &add_param(make_matrix_param("translator.embed", cfg_.V, cfg_.d, rng));
  for (int l = 0; l < cfg_.enc_layers; ++l) {
    const std::string base = "translator.enc" + std::to_string(l);
    EncLayer layer;
    layer.attn = make_attention(base + ".attn", cfg_.d, rng);
    layer.ff = make_ff(base + ".ff", rng);
    enc_.push_back(layer);
  }
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    const std::string base = "translator.dec" + std::to_string(l);
    DecLayer layer;
    layer.self_attn = make_attention(base + ".self", cfg_.d, rng);
    layer.cross_attn = make_attention(base + ".cross", cfg_.enriched_width(), rng);
    layer.ff = make_ff(base + ".ff", rng);
    dec_.push_back(layer);
  }
  out_w_ = &add_param(make_matrix_param("translator.out.w", cfg_.d, cfg_.V, rng));
  out_b_ = &add_param(make_bias_param("translator.out.b", cfg_.V));
}

std::vector<Parameter*> Translator::params() {
  std::vector<Parameter*> out;
  out.reserve(store_.size());
  for (Parameter& p : store_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Translator::params() const {
  std::vector<const Parameter*> out;
  out.reserve(store_.size());
  for (const Parameter& p : store_) out.push_back(&p);
  return out;
}

Parameter& Translator::param(const std::string& name) {
  for (Parameter& p : store_) {
    if (p.name == name) return p;
  }
  throw ConfigMismatch("translator has no parameter " + name);
}

int Translator::embed_tokens(Tape& t, const TokenSequence& tokens) {
  if (tokens.empty()) throw EmptySequence("translator: empty token sequence");
  if (static_cast<int>(tokens.size()) > cfg_.M) {
    throw TooLong("translator: sequence length " + std::to_string(tokens.size()) +
                  " exceeds M=" + std::to_string(cfg_.M));
  }
  const int T = static_cast<int>(tokens.size());
  const int emb = t.scale(t.embedding_lookup(t.leaf(*embed_), tokens), std::sqrt(cfg_.d));
  Tensor pos(T, cfg_.d);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < cfg_.d; j += 2) {
      const double angle = i / std::pow(10000.0, static_cast<double>(j) / cfg_.d);
      pos.at(i, j) = std::sin(angle);
      if (j + 1 < cfg_.d) pos.at(i, j + 1) = std::cos(angle);
    }
  }
  return t.add(emb, t.constant(pos));
}

int Translator::ff_block(Tape& t, const FeedForward& ff, int x) {
  const int h = t.tanh(t.add(t.matmul(x, t.leaf(*ff.w1)), t.leaf(*ff.b1)));
  return t.add(t.matmul(h, t.leaf(*ff.w2)), t.leaf(*ff.b2));
}

int Translator::encode_graph(Tape& t, const TokenSequence& x, const PropertyVector& px_norm,
                             const PropertyVector& py_norm) {
  int h = embed_tokens(t, x);
  const int T = static_cast<int>(x.size());
  const Tensor open_mask(T, T);  // all positions visible
  for (const EncLayer& layer : enc_) {
    const int attn = multi_head_attention(t, layer.attn, h, h, open_mask, cfg_.heads);
    h = t.layer_norm(t.add(h, attn));
    const int ff = ff_block(t, layer.ff, h);
    h = t.layer_norm(t.add(h, ff));
  }
  // Enrichment: every token vector gains (p_X, p_Y).
  Tensor props(T, 2 * cfg_.k);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < cfg_.k; ++j) {
      props.at(i, j) = px_norm[j];
      props.at(i, cfg_.k + j) = py_norm[j];
    }
  }
  return t.concat({h, t.constant(props)}, 1);
}

int Translator::decode_graph(Tape& t, int enc_node, const TokenSequence& dec_input) {
  if (t.value(enc_node).cols != cfg_.enriched_width()) {
    throw ShapeMismatch("decoder expects enriched width " +
                        std::to_string(cfg_.enriched_width()) + ", got " +
                        t.value(enc_node).shape_str());
  }
  int h = embed_tokens(t, dec_input);
  const int Td = static_cast<int>(dec_input.size());
  const int Te = t.value(enc_node).rows;
  const Tensor self_mask = causal_mask(Td);
  const Tensor cross_mask(Td, Te);  // encoder fully visible
  for (const DecLayer& layer : dec_) {
    const int self_ctx = multi_head_attention(t, layer.self_attn, h, h, self_mask, cfg_.heads);
    h = t.layer_norm(t.add(h, self_ctx));
    const int cross_ctx =
        multi_head_attention(t, layer.cross_attn, h, enc_node, cross_mask, cfg_.heads);
    h = t.layer_norm(t.add(h, cross_ctx));
    const int ff = ff_block(t, layer.ff, h);
    h = t.layer_norm(t.add(h, ff));
  }
  return t.add(t.matmul(h, t.leaf(*out_w_)), t.leaf(*out_b_));
}

EncoderOutput Translator::encode(const TokenSequence& x, const PropertyVector& px_norm,
                                 const PropertyVector& py_norm) {
  Tape t;
  const int node = encode_graph(t, x, px_norm, py_norm);
  return EncoderOutput{t.value(node)};
}

Tensor Translator::decode_step(const EncoderOutput& enc, const TokenSequence& prefix) {
  if (prefix.empty() || prefix.front() != vocab::kBegin) {
    throw MalformedSequence("decode_step: prefix must start at [BEGIN]");
  }
  if (static_cast<int>(prefix.size()) >= cfg_.M) {
    throw TooLong("decode_step: prefix reached M=" + std::to_string(cfg_.M));
  }
  Tape t;
  const int logits = decode_graph(t, t.constant(enc.z), prefix);
  const Tensor& all = t.value(logits);
  Tensor last(1, all.cols);
  for (int j = 0; j < all.cols; ++j) last.at(0, j) = all.at(all.rows - 1, j);
  return last;
}

TokenSequence teacher_input(const TokenSequence& full) {
  if (full.size() < 2) throw MalformedSequence("teacher forcing needs >= 2 tokens");
  return TokenSequence(full.begin(), full.end() - 1);
}

TokenSequence teacher_target(const TokenSequence& full) {
  if (full.size() < 2) throw MalformedSequence("teacher forcing needs >= 2 tokens");
  return TokenSequence(full.begin() + 1, full.end());
}

int translation_loss_graph(Tape& t, const std::vector<int>& logit_nodes,
                           const std::vector<TokenSequence>& targets) {
  if (logit_nodes.size() != targets.size()) {
    throw ShapeMismatch("translation loss: " + std::to_string(logit_nodes.size()) +
                        " logit sets vs " + std::to_string(targets.size()) + " targets");
  }
  if (logit_nodes.empty()) throw EmptySequence("translation loss: empty batch");
  int total = -1;
  int count = 0;
  for (size_t i = 0; i < logit_nodes.size(); ++i) {
    const Tensor& logits = t.value(logit_nodes[i]);
    const TokenSequence& target = targets[i];
    if (logits.rows != static_cast<int>(target.size())) {
      throw ShapeMismatch("translation loss: " + logits.shape_str() + " vs target length " +
                          std::to_string(target.size()));
    }
    const int rows = logits.rows;
    const int lp = t.log_softmax(logit_nodes[i]);
    // Pads contribute neither to the sum nor to the averaging count.
    std::vector<int> picks(target.size());
    Tensor mask(rows, 1);
    for (size_t j = 0; j < target.size(); ++j) {
      const bool pad = target[j] == vocab::kPad;
      picks[j] = pad ? 0 : target[j];
      mask.at(static_cast<int>(j), 0) = pad ? 0.0 : 1.0;
      if (!pad) ++count;
    }
    const int picked = t.mul(t.gather_cols(lp, picks), t.constant(mask));
    const int s = t.sum_all(picked);
    total = total < 0 ? s : t.add(total, s);
  }
  if (count == 0) throw EmptySequence("translation loss: all positions are padding");
  return t.scale(total, -1.0 / count);
}

}  // namespace molgen
