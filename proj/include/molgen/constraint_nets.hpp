// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <string>
#include <vector>

#include "molgen/chem.hpp"
#include "molgen/properties.hpp"
#include "molgen/tensor.hpp"

namespace molgen {

// Probability-weighted embedding: each row of the soft sequence (a
// distribution over V) selects a convex mix of embedding rows. One-hot rows
// reproduce hard lookup bit-identically, so the same networks serve both the
// pre-training path (hard tokens) and the differentiable bridge from the
// decoder softmax. Throws ShapeMismatch; rows must sum to 1.
int soft_embed(Tape& t, int soft_rows, int table);

// Recurrent cell weights for one direction: gates (i, f, g, o) stacked.
struct LstmDirection {
  Parameter* w = nullptr;  // [(in + d) x 4d]
  Parameter* b = nullptr;  // [1 x 4d]
};

// Token sequences consumed by the constraint nets carry no [BEGIN]; they are
// character ids terminated by [END], mirroring what the decoder emits.
TokenSequence strip_begin(const TokenSequence& framed);

// Sequence -> normalized property vector: own embeddings, one recurrent layer
// per direction, final states concatenated to 2d, then dense 2d -> d (tanh)
// -> k (linear).
class PropNet {
 public:
  PropNet(int d, int V, Rng& rng);

  int d() const { return d_; }
  int V() const { return V_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  void freeze();
  bool frozen() const;

  // Batched graph over hard token sequences -> [B x k].
  int forward_graph(Tape& t, const std::vector<TokenSequence>& batch);
  // Single soft sequence [T x V] -> [1 x k].
  int forward_soft_graph(Tape& t, int soft_rows);
  // Bidirectional features [B x 2d] (forward-direction state first).
  int features_graph(Tape& t, const std::vector<TokenSequence>& batch);

  Tensor forward(const std::vector<TokenSequence>& batch);

 private:
  Parameter& add_param(Parameter p);
  int d_;
  int V_;
  std::deque<Parameter> store_;
  Parameter* embed_ = nullptr;
  LstmDirection fwd_;
  LstmDirection bwd_;
  Parameter* fc1_w_ = nullptr;
  Parameter* fc1_b_ = nullptr;
  Parameter* fc2_w_ = nullptr;
  Parameter* fc2_b_ = nullptr;
};

// Sequence pair -> similarity probability. One recurrent layer shared by both
// inputs; ordered feature concat (a, b) to 4d; dense 4d -> d (tanh) -> 1;
// sigmoid.
class SimNet {
 public:
  SimNet(int d, int V, Rng& rng);

  int d() const { return d_; }
  int V() const { return V_; }
  std::vector<Parameter*> params();
  std::vector<const Parameter*> params() const;
  void freeze();
  bool frozen() const;

  // Batched graph over hard token pairs -> [B x 1] probabilities.
  int forward_graph(Tape& t, const std::vector<TokenSequence>& a,
                    const std::vector<TokenSequence>& b);
  // Hard first sequence + soft second sequence [T x V] -> [1 x 1]. Argument
  // order matches scoring use: the reference molecule is always the first
  // side, the generated one the second.
  int forward_soft_graph(Tape& t, const TokenSequence& a, int soft_rows);
  // Shared-layer features [B x 2d] for one side.
  int features_graph(Tape& t, const std::vector<TokenSequence>& batch);

  Tensor forward(const std::vector<TokenSequence>& a, const std::vector<TokenSequence>& b);
  double forward_pair(const TokenSequence& a, const TokenSequence& b);

 private:
  Parameter& add_param(Parameter p);
  int head_graph(Tape& t, int feats_a, int feats_b);
  int d_;
  int V_;
  std::deque<Parameter> store_;
  Parameter* embed_ = nullptr;
  LstmDirection fwd_;
  LstmDirection bwd_;
  Parameter* fc1_w_ = nullptr;
  Parameter* fc1_b_ = nullptr;
  Parameter* fc2_w_ = nullptr;
  Parameter* fc2_b_ = nullptr;
};

// Mean squared Euclidean distance between predicted and target property rows.
int propnet_loss_graph(Tape& t, int predicted, const std::vector<PropertyVector>& targets);

// Mean binary cross entropy; probabilities are clipped to [1e-7, 1 - 1e-7].
int simnet_loss_graph(Tape& t, int predicted, const std::vector<int>& labels);

// 1 iff the fingerprints of x and y reach the similarity threshold
// (inclusive). Parse errors propagate.
int label_similarity(const std::string& x, const std::string& y, double delta = 0.4);

}  // namespace molgen
