// SPDX-License-Identifier: Apache-2.0

#include "molgen/constraint_nets.hpp"

#include <algorithm>
#include <cmath>

#include "molgen/errors.hpp"
#include "molgen/fingerprint.hpp"

namespace molgen {

int soft_embed(Tape& t, int soft_rows, int table) {
  const Tensor& s = t.value(soft_rows);
  const Tensor& e = t.value(table);
  if (s.cols != e.rows) {
    throw ShapeMismatch("soft_embed: " + s.shape_str() + " vs table " + e.shape_str());
  }
  for (int i = 0; i < s.rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < s.cols; ++j) {
      if (s.at(i, j) < -1e-12) throw RangeError("soft_embed: negative probability");
      sum += s.at(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw RangeError("soft_embed: row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  return t.matmul(soft_rows, table);
}

TokenSequence strip_begin(const TokenSequence& framed) {
  TokenSequence out = framed;
  if (!out.empty() && out.front() == vocab::kBegin) out.erase(out.begin());
  if (out.empty()) throw EmptySequence("strip_begin: nothing left after framing");
  return out;
}

namespace {

struct LstmState {
  int h;
  int c;
};

LstmState lstm_step(Tape& t, const LstmDirection& p, int x_t, LstmState prev, int d) {
  const int z = t.concat({x_t, prev.h}, 1);
  const int gates = t.add(t.matmul(z, t.leaf(*p.w)), t.leaf(*p.b));
  const int i = t.sigmoid(t.slice(gates, 1, 0, d));
  const int f = t.sigmoid(t.slice(gates, 1, d, d));
  const int g = t.tanh(t.slice(gates, 1, 2 * d, d));
  const int o = t.sigmoid(t.slice(gates, 1, 3 * d, d));
  const int c = t.add(t.mul(f, prev.c), t.mul(i, g));
  return {t.mul(o, t.tanh(c)), c};
}

// One direction over a batch of hard token sequences; pads beyond each
// sample's length never reach its extracted state because extraction happens
// at that sample's own last step.
int lstm_final_states(Tape& t, const LstmDirection& p, int table,
                      const std::vector<TokenSequence>& batch, int d, bool reverse) {
  const int B = static_cast<int>(batch.size());
  if (B == 0) throw EmptySequence("lstm: empty batch");
  size_t t_max = 0;
  for (const TokenSequence& seq : batch) {
    if (seq.empty()) throw EmptySequence("lstm: empty sequence in batch");
    t_max = std::max(t_max, seq.size());
  }
  LstmState s{t.constant(Tensor(B, d)), t.constant(Tensor(B, d))};
  std::vector<int> h_at(t_max);
  for (size_t step = 0; step < t_max; ++step) {
    std::vector<int> ids(static_cast<size_t>(B), vocab::kPad);
    for (int i = 0; i < B; ++i) {
      const TokenSequence& seq = batch[static_cast<size_t>(i)];
      if (step < seq.size()) {
        ids[static_cast<size_t>(i)] = reverse ? seq[seq.size() - 1 - step] : seq[step];
      }
    }
    const int x = t.embedding_lookup(table, ids);
    s = lstm_step(t, p, x, s, d);
    h_at[step] = s.h;
  }
  if (B == 1) return h_at[batch[0].size() - 1];
  std::vector<int> rows(static_cast<size_t>(B));
  for (int i = 0; i < B; ++i) {
    rows[static_cast<size_t>(i)] = t.slice(h_at[batch[static_cast<size_t>(i)].size() - 1], 0, i, 1);
  }
  return t.concat(rows, 0);
}

// One direction over a single pre-embedded sequence node [T x d_in].
int lstm_final_state_embedded(Tape& t, const LstmDirection& p, int emb, int d, bool reverse) {
  const int T = t.value(emb).rows;
  if (T == 0) throw EmptySequence("lstm: empty embedded sequence");
  LstmState s{t.constant(Tensor(1, d)), t.constant(Tensor(1, d))};
  for (int step = 0; step < T; ++step) {
    const int x = t.slice(emb, 0, reverse ? T - 1 - step : step, 1);
    s = lstm_step(t, p, x, s, d);
  }
  return s.h;
}

bool all_frozen(const std::deque<Parameter>& store) {
  for (const Parameter& p : store) {
    if (!p.frozen) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// PropNet
// ---------------------------------------------------------------------------

Parameter& PropNet::add_param(Parameter p) {
  store_.push_back(std::move(p));
  return store_.back();
}

PropNet::PropNet(int d, int V, Rng& rng) : d_(d), V_(V) {
  if (d <= 0 || V <= 0) throw ConfigMismatch("propnet: d and V must be positive");
  embed_ = &add_param(make_matrix_param("propnet.embed", V, d, rng));
  fwd_.w = &add_param(make_matrix_param("propnet.fwd.w", 2 * d, 4 * d, rng));
  fwd_.b = &add_param(make_bias_param("propnet.fwd.b", 4 * d));
  bwd_.w = &add_param(make_matrix_param("propnet.bwd.w", 2 * d, 4 * d, rng));
  bwd_.b = &add_param(make_bias_param("propnet.bwd.b", 4 * d));
  fc1_w_ = &add_param(make_matrix_param("propnet.fc1.w", 2 * d, d, rng));
  fc1_b_ = &add_param(make_bias_param("propnet.fc1.b", d));
  fc2_w_ = &add_param(make_matrix_param("propnet.fc2.w", d, kNumProperties, rng));
  fc2_b_ = &add_param(make_bias_param("propnet.fc2.b", kNumProperties));
}

std::vector<Parameter*> PropNet::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : store_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> PropNet::params() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : store_) out.push_back(&p);
  return out;
}

void PropNet::freeze() {
  for (Parameter& p : store_) p.frozen = true;
}

bool PropNet::frozen() const { return all_frozen(store_); }

int PropNet::features_graph(Tape& t, const std::vector<TokenSequence>& batch) {
  const int table = t.leaf(*embed_);
  const int f = lstm_final_states(t, fwd_, table, batch, d_, false);
  const int b = lstm_final_states(t, bwd_, table, batch, d_, true);
  return t.concat({f, b}, 1);
}

int PropNet::forward_graph(Tape& t, const std::vector<TokenSequence>& batch) {
  const int feats = features_graph(t, batch);
  const int h = t.tanh(t.add(t.matmul(feats, t.leaf(*fc1_w_)), t.leaf(*fc1_b_)));
  return t.add(t.matmul(h, t.leaf(*fc2_w_)), t.leaf(*fc2_b_));
}

int PropNet::forward_soft_graph(Tape& t, int soft_rows) {
  const int emb = soft_embed(t, soft_rows, t.leaf(*embed_));
  const int f = lstm_final_state_embedded(t, fwd_, emb, d_, false);
  const int b = lstm_final_state_embedded(t, bwd_, emb, d_, true);
  const int feats = t.concat({f, b}, 1);
  const int h = t.tanh(t.add(t.matmul(feats, t.leaf(*fc1_w_)), t.leaf(*fc1_b_)));
  return t.add(t.matmul(h, t.leaf(*fc2_w_)), t.leaf(*fc2_b_));
}

Tensor PropNet::forward(const std::vector<TokenSequence>& batch) {
  Tape t;
  return t.value(forward_graph(t, batch));
}

// ---------------------------------------------------------------------------
// SimNet
// ---------------------------------------------------------------------------

Parameter& SimNet::add_param(Parameter p) {
  store_.push_back(std::move(p));
  return store_.back();
}

SimNet::SimNet(int d, int V, Rng& rng) : d_(d), V_(V) {
  if (d <= 0 || V <= 0) throw ConfigMismatch("simnet: d and V must be positive");
  embed_ = &add_param(make_matrix_param("simnet.embed", V, d, rng));
  // One recurrent layer; both inputs of a pair run through these same weights.
  fwd_.w = &add_param(make_matrix_param("simnet.fwd.w", 2 * d, 4 * d, rng));
  fwd_.b = &add_param(make_bias_param("simnet.fwd.b", 4 * d));
  bwd_.w = &add_param(make_matrix_param("simnet.bwd.w", 2 * d, 4 * d, rng));
  bwd_.b = &add_param(make_bias_param("simnet.bwd.b", 4 * d));
  fc1_w_ = &add_param(make_matrix_param("simnet.fc1.w", 4 * d, d, rng));
  fc1_b_ = &add_param(make_bias_param("simnet.fc1.b", d));
  fc2_w_ = &add_param(make_matrix_param("simnet.fc2.w", d, 1, rng));
  fc2_b_ = &add_param(make_bias_param("simnet.fc2.b", 1));
}

std::vector<Parameter*> SimNet::params() {
  std::vector<Parameter*> out;
  for (Parameter& p : store_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> SimNet::params() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : store_) out.push_back(&p);
  return out;
}

void SimNet::freeze() {
  for (Parameter& p : store_) p.frozen = true;
}

bool SimNet::frozen() const { return all_frozen(store_); }

int SimNet::features_graph(Tape& t, const std::vector<TokenSequence>& batch) {
  const int table = t.leaf(*embed_);
  const int f = lstm_final_states(t, fwd_, table, batch, d_, false);
  const int b = lstm_final_states(t, bwd_, table, batch, d_, true);
  return t.concat({f, b}, 1);
}

int SimNet::head_graph(Tape& t, int feats_a, int feats_b) {
  const int joined = t.concat({feats_a, feats_b}, 1);
  const int h = t.tanh(t.add(t.matmul(joined, t.leaf(*fc1_w_)), t.leaf(*fc1_b_)));
  return t.sigmoid(t.add(t.matmul(h, t.leaf(*fc2_w_)), t.leaf(*fc2_b_)));
}

int SimNet::forward_graph(Tape& t, const std::vector<TokenSequence>& a,
                          const std::vector<TokenSequence>& b) {
  if (a.size() != b.size()) {
    throw ShapeMismatch("simnet: " + std::to_string(a.size()) + " left sequences vs " +
                        std::to_string(b.size()) + " right");
  }
  return head_graph(t, features_graph(t, a), features_graph(t, b));
}

int SimNet::forward_soft_graph(Tape& t, const TokenSequence& a, int soft_rows) {
  const int feats_a = features_graph(t, {a});
  const int emb = soft_embed(t, soft_rows, t.leaf(*embed_));
  const int f = lstm_final_state_embedded(t, fwd_, emb, d_, false);
  const int r = lstm_final_state_embedded(t, bwd_, emb, d_, true);
  const int feats_b = t.concat({f, r}, 1);
  return head_graph(t, feats_a, feats_b);
}

Tensor SimNet::forward(const std::vector<TokenSequence>& a, const std::vector<TokenSequence>& b) {
  Tape t;
  return t.value(forward_graph(t, a, b));
}

double SimNet::forward_pair(const TokenSequence& a, const TokenSequence& b) {
  Tape t;
  return t.value(forward_graph(t, {a}, {b})).v[0];
}

// ---------------------------------------------------------------------------
// Losses and labels
// ---------------------------------------------------------------------------

int propnet_loss_graph(Tape& t, int predicted, const std::vector<PropertyVector>& targets) {
  const Tensor& pred = t.value(predicted);
  if (pred.rows != static_cast<int>(targets.size()) || pred.cols != kNumProperties) {
    throw ShapeMismatch("propnet loss: " + pred.shape_str() + " vs " +
                        std::to_string(targets.size()) + " target rows");
  }
  Tensor neg(pred.rows, pred.cols);
  for (int i = 0; i < pred.rows; ++i) {
    for (int j = 0; j < kNumProperties; ++j) neg.at(i, j) = -targets[static_cast<size_t>(i)][j];
  }
  const int diff = t.add(predicted, t.constant(neg));
  const int sq = t.mul(diff, diff);
  return t.mean_all(t.sum(sq, 1));
}

int simnet_loss_graph(Tape& t, int predicted, const std::vector<int>& labels) {
  const Tensor& pred = t.value(predicted);
  if (pred.rows != static_cast<int>(labels.size()) || pred.cols != 1) {
    throw ShapeMismatch("simnet loss: " + pred.shape_str() + " vs " +
                        std::to_string(labels.size()) + " labels");
  }
  Tensor y(pred.rows, 1);
  Tensor y1(pred.rows, 1);
  for (int i = 0; i < pred.rows; ++i) {
    const int label = labels[static_cast<size_t>(i)];
    if (label != 0 && label != 1) throw RangeError("simnet labels must be 0 or 1");
    y.at(i, 0) = label;
    y1.at(i, 0) = 1 - label;
  }
  const int s = t.clip(predicted, 1e-7, 1.0 - 1e-7);
  const int pos = t.mul(t.constant(y), t.log(s));
  const int negs = t.mul(t.constant(y1), t.log(t.add_scalar(t.scale(s, -1.0), 1.0)));
  return t.scale(t.mean_all(t.add(pos, negs)), -1.0);
}

int label_similarity(const std::string& x, const std::string& y, double delta) {
  const Fingerprint fx = morgan_fingerprint(parse_graph(x));
  const Fingerprint fy = morgan_fingerprint(parse_graph(y));
  return tanimoto(fx, fy) >= delta ? 1 : 0;
}

}  // namespace molgen
