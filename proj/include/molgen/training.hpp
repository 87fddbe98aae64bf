// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "molgen/checkpoint.hpp"
#include "molgen/constraint_nets.hpp"
#include "molgen/pairs.hpp"
#include "molgen/properties.hpp"
#include "molgen/translator.hpp"

namespace molgen {

// Shared schedule for all three training entry points. dev_fraction 0 reuses
// the training split for the dev evaluation (overfit mode); max_len bounds
// tokenized sequences at batch-build time.
struct TrainConfig {
  double lambda_p = 0.5;
  double lambda_s = 0.5;
  double lr = 1e-3;
  int batch = 16;
  int max_epochs = 50;
  int patience = 10;
  double dev_fraction = 0.2;
  int max_len = 64;
  uint64_t seed = 1;

  void validate() const;  // throws RangeError
};

// Per-epoch loss table plus the early-stopping choice. Column meanings depend
// on the producer: translator training reports the exact loss components
// (lp and ls are the weighted-in sums), while the pre-trainers report their
// single objective (propnet: per-entry MSE in normalized units into lp;
// simnet: mean BCE into ls) with the other columns zero.
struct TrainReport {
  struct Row {
    int epoch = 0;
    double lt = 0.0;
    double lp = 0.0;
    double ls = 0.0;
    double lcmg = 0.0;
    std::string split;  // "train" or "dev"
  };
  std::vector<Row> rows;
  int chosen_epoch = -1;
};

// TSV: epoch, lt, lp, ls, lcmg, split; chosen epoch in a header comment.
void write_train_report(const std::string& path, const TrainReport& report);
TrainReport read_train_report(const std::string& path);

// Labeled rows for pre-training.
struct PropertyExample {
  std::string smiles;
  PropertyVector props{};
};

struct SimilarityExample {
  std::string x_smiles;
  std::string y_smiles;
  int label = 0;
};

struct PropnetPretrainResult {
  TrainReport report;
  double dev_mse = 0.0;  // per-entry, normalized units, at the chosen epoch
  PropertyScaler scaler;
};

// MSE training on scaler-normalized properties; the scaler is fitted on the
// training split only. Best-dev weights are left in `net`.
// Throws EmptyCorpus (fewer than 2 rows), RangeError.
PropnetPretrainResult pretrain_propnet(PropNet& net, const std::vector<PropertyExample>& corpus,
                                       const TrainConfig& cfg);

struct SimnetPretrainResult {
  TrainReport report;
  double dev_accuracy = 0.0;  // at the chosen epoch
};

// BCE training; accuracy counts dev pairs with (p > 0.5) == label. Best-dev
// weights are left in `net`. Throws EmptyCorpus, DegenerateLabels.
SimnetPretrainResult pretrain_simnet(SimNet& net, const std::vector<SimilarityExample>& corpus,
                                     const TrainConfig& cfg);

// Checkpoint + sibling `<path>.config` holding the shape keys; the scaler
// rides along as frozen pseudo-tensors. Loaders rebuild the network from the
// config file and throw ConfigMismatch when its hash drifts from the
// checkpoint's.
void save_propnet(const PropNet& net, const PropertyScaler& scaler, const std::string& path);
void save_simnet(const SimNet& net, const std::string& path);

struct PropnetArtifacts {
  std::unique_ptr<PropNet> net;
  PropertyScaler scaler;
};
PropnetArtifacts load_propnet(const std::string& path);
std::unique_ptr<SimNet> load_simnet(const std::string& path);

// Trainable translator plus frozen constraint networks and the property
// scaler adopted from PropNet pre-training.
struct CmgModel {
  std::unique_ptr<Translator> translator;
  std::unique_ptr<PropNet> propnet;
  std::unique_ptr<SimNet> simnet;
  PropertyScaler scaler;

  KvConfig to_config() const;  // shape-defining keys only
  std::vector<Parameter*> all_params();
  std::vector<const Parameter*> all_params() const;
  std::vector<Parameter*> trainable_params();  // excludes frozen tensors
};

// Freezes both constraint networks. Throws VocabMismatch when the three
// vocabularies differ, UnfittedScaler when the scaler is not fitted.
CmgModel assemble_cmg(std::unique_ptr<Translator> translator, std::unique_ptr<PropNet> propnet,
                      std::unique_ptr<SimNet> simnet, PropertyScaler scaler);

void save_cmg(const CmgModel& model, const std::string& path);
CmgModel load_cmg(const std::string& path);

// Tokenized training batch; x/y are [BEGIN]...[END] framed, properties raw.
struct CmgBatch {
  std::vector<TokenSequence> x;
  std::vector<TokenSequence> y;
  std::vector<PropertyVector> px;
  std::vector<PropertyVector> py;

  int size() const { return static_cast<int>(x.size()); }
};

CmgBatch make_cmg_batch(const std::vector<PairRow>& rows, int max_len);

// Tape node ids of the composite objective and its parts. With both weights
// zero the returned total IS the translation-loss node, so the equality
// holds to the last bit.
struct CmgLossNodes {
  int lt = -1;
  int lp = -1;
  int ls = -1;
  int lcmg = -1;
};

// Teacher-forced translation loss; decoder softmax rows feed PropNet (target:
// normalized p_Y) and SimNet (first side X, label 1) through soft embedding.
// Throws EmptyCorpus, ShapeMismatch, RangeError (negative weights).
CmgLossNodes cmg_loss_graph(Tape& t, CmgModel& model, const CmgBatch& batch, double lambda_p,
                            double lambda_s);

struct CmgLossValues {
  double lt = 0.0;
  double lp = 0.0;
  double ls = 0.0;
  double lcmg = 0.0;
};

CmgLossValues cmg_loss(CmgModel& model, const CmgBatch& batch, double lambda_p, double lambda_s);

// Fraction of teacher-forced positions whose argmax logit hits the target.
double token_accuracy(CmgModel& model, const CmgBatch& batch);

// Mini-batch adam on the translator parameters; early stopping on dev lcmg
// with cfg.patience. Best weights are restored into the model and, when
// checkpoint_path is non-empty, persisted there at every improvement.
// Throws EmptyCorpus, RangeError, TooFewRows.
TrainReport train_cmg(CmgModel& model, const std::vector<PairRow>& corpus, const TrainConfig& cfg,
                      const std::string& checkpoint_path = "");

}  // namespace molgen
