// SPDX-License-Identifier: Apache-2.0

#include "molgen/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "doctest.h"
#include "fd_check.hpp"
#include "molgen/errors.hpp"

using namespace molgen;
using molgen::testing::make_pair_corpus;
using molgen::testing::make_property_corpus;
using molgen::testing::make_unique_smiles;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("molgen_training_test_" + name) {}
  ~TempFile() {
    std::remove(path.c_str());
    std::remove((path + ".config").c_str());
  }
};

PropertyScaler identity_scaler() {
  return PropertyScaler({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
}

TranslatorConfig tiny_translator_config() {
  TranslatorConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.ff = 16;
  cfg.M = 24;
  return cfg;
}

// Assembled model with fresh (untrained) parts; constraint nets end frozen.
CmgModel tiny_model(uint64_t seed, int d = 8, int net_d = 4) {
  TranslatorConfig cfg = tiny_translator_config();
  cfg.d = d;
  Rng rng(seed);
  auto translator = std::make_unique<Translator>(cfg, rng);
  auto propnet = std::make_unique<PropNet>(net_d, vocab::size(), rng);
  auto simnet = std::make_unique<SimNet>(net_d, vocab::size(), rng);
  return assemble_cmg(std::move(translator), std::move(propnet), std::move(simnet),
                      identity_scaler());
}

CmgBatch two_pair_batch() {
  std::vector<PairRow> rows(2);
  rows[0].x_smiles = "CO";
  rows[0].y_smiles = "CN";
  rows[1].x_smiles = "CC";
  rows[1].y_smiles = "CO";
  for (PairRow& r : rows) {
    r.px = surrogate_properties(parse_graph(r.x_smiles));
    r.py = surrogate_properties(parse_graph(r.y_smiles));
  }
  return make_cmg_batch(rows, 24);
}

double min_dev_column(const TrainReport& report, double TrainReport::Row::*col) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : report.rows) {
    if (r.split == "dev") best = std::min(best, r.*col);
  }
  return best;
}

const TrainReport::Row& dev_row_at(const TrainReport& report, int epoch) {
  for (const auto& r : report.rows) {
    if (r.split == "dev" && r.epoch == epoch) return r;
  }
  REQUIRE(false);
  return report.rows.front();
}

}  // namespace

TEST_CASE("train config validation rejects out-of-range fields") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.lambda_p = -0.1;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.lambda_s = -1.0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.patience = 0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.dev_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), RangeError);
  bad = cfg;
  bad.max_len = 2;
  CHECK_THROWS_AS(bad.validate(), RangeError);
}

TEST_CASE("train report TSV round-trips") {
  TrainReport report;
  report.chosen_epoch = 2;
  for (int epoch = 1; epoch <= 2; ++epoch) {
    for (const char* split : {"train", "dev"}) {
      TrainReport::Row r;
      r.epoch = epoch;
      r.lt = 1.5 / epoch;
      r.lp = 0.25 * epoch;
      r.ls = 0.125;
      r.lcmg = r.lt + 0.5 * r.lp + 0.5 * r.ls;
      r.split = split;
      report.rows.push_back(r);
    }
  }
  TempFile f("report.tsv");
  write_train_report(f.path, report);
  const TrainReport got = read_train_report(f.path);
  CHECK(got.chosen_epoch == 2);
  REQUIRE(got.rows.size() == report.rows.size());
  for (size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(got.rows[i].epoch == report.rows[i].epoch);
    CHECK(got.rows[i].lt == report.rows[i].lt);
    CHECK(got.rows[i].lp == report.rows[i].lp);
    CHECK(got.rows[i].ls == report.rows[i].ls);
    CHECK(got.rows[i].lcmg == report.rows[i].lcmg);
    CHECK(got.rows[i].split == report.rows[i].split);
  }
  CHECK_THROWS_AS(read_train_report("definitely_missing_report.tsv"), IoError);
}

TEST_CASE("propnet pre-training reaches dev MSE below 0.05 on a 500-molecule corpus") {
  Rng corpus_rng(101);
  const std::vector<PropertyExample> corpus = make_property_corpus(corpus_rng, 500);
  Rng init(5);
  PropNet net(32, vocab::size(), init);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.seed = 7;
  const PropnetPretrainResult res = pretrain_propnet(net, corpus, cfg);
  CHECK(res.dev_mse < 0.05);
  CHECK(res.scaler.fitted());
  CHECK(res.report.chosen_epoch >= 1);
  // The chosen epoch carries the minimum dev loss seen.
  CHECK(dev_row_at(res.report, res.report.chosen_epoch).lp ==
        doctest::Approx(min_dev_column(res.report, &TrainReport::Row::lp)).epsilon(1e-12));
  CHECK(res.dev_mse == doctest::Approx(min_dev_column(res.report, &TrainReport::Row::lp)));
}

TEST_CASE("propnet fits a constant-label corpus to near-zero dev MSE") {
  Rng corpus_rng(102);
  std::vector<PropertyExample> corpus;
  for (std::string& s : make_unique_smiles(corpus_rng, 50)) {
    PropertyExample ex;
    ex.smiles = std::move(s);
    ex.props = {0.25, 0.5, 0.75};
    corpus.push_back(std::move(ex));
  }
  Rng init(6);
  PropNet net(8, vocab::size(), init);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.seed = 8;
  const PropnetPretrainResult res = pretrain_propnet(net, corpus, cfg);
  CHECK(res.dev_mse < 1e-4);
}

TEST_CASE("propnet pre-training input validation") {
  Rng init(1);
  PropNet net(4, vocab::size(), init);
  TrainConfig cfg;
  CHECK_THROWS_AS(pretrain_propnet(net, {}, cfg), EmptyCorpus);
  CHECK_THROWS_AS(pretrain_propnet(net, {PropertyExample{"CCO", {}}}, cfg), EmptyCorpus);
  TrainConfig zero = cfg;
  zero.max_epochs = 0;
  const std::vector<PropertyExample> two = {{"CCO", {1, 0.5, 0.5}}, {"CCN", {2, 0.5, 0.5}}};
  CHECK_THROWS_AS(pretrain_propnet(net, two, zero), RangeError);
}

TEST_CASE("propnet pre-training is deterministic under a fixed seed") {
  Rng corpus_rng(103);
  const std::vector<PropertyExample> corpus = make_property_corpus(corpus_rng, 40);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 11;
  Rng init_a(9);
  PropNet a(8, vocab::size(), init_a);
  const PropnetPretrainResult ra = pretrain_propnet(a, corpus, cfg);
  Rng init_b(9);
  PropNet b(8, vocab::size(), init_b);
  const PropnetPretrainResult rb = pretrain_propnet(b, corpus, cfg);
  CHECK(ra.dev_mse == rb.dev_mse);
  REQUIRE(ra.report.rows.size() == rb.report.rows.size());
  for (size_t i = 0; i < ra.report.rows.size(); ++i) {
    CHECK(ra.report.rows[i].lp == rb.report.rows[i].lp);
  }
  const auto pa = std::as_const(a).params();
  const auto pb = std::as_const(b).params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.v == pb[i]->value.v);
}

namespace {

// Positives pair a plain chain with itself; negatives pair it with an
// aromatic chain, so the two classes are perfectly separable.
std::vector<SimilarityExample> separable_pairs(int per_class) {
  Rng rng(104);
  std::vector<SimilarityExample> out;
  for (int i = 0; i < per_class; ++i) {
    static const char kPlain[] = {'C', 'N', 'O', 'S'};
    static const char kArom[] = {'c', 'n', 'o', 's'};
    std::string plain;
    std::string arom;
    const int len = 3 + static_cast<int>(rng.uniform_int(6));
    for (int j = 0; j < len; ++j) {
      plain += kPlain[rng.uniform_int(4)];
      arom += kArom[rng.uniform_int(4)];
    }
    out.push_back({plain, plain, 1});
    out.push_back({plain, arom, 0});
  }
  return out;
}

}  // namespace

TEST_CASE("simnet pre-training separates an easy corpus") {
  const std::vector<SimilarityExample> corpus = separable_pairs(60);
  Rng init(12);
  SimNet net(16, vocab::size(), init);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.seed = 13;
  const SimnetPretrainResult res = pretrain_simnet(net, corpus, cfg);
  CHECK(res.dev_accuracy >= 0.99);
  CHECK(res.report.chosen_epoch >= 1);
}

TEST_CASE("simnet pre-training input validation") {
  Rng init(2);
  SimNet net(4, vocab::size(), init);
  TrainConfig cfg;
  CHECK_THROWS_AS(pretrain_simnet(net, {}, cfg), EmptyCorpus);
  std::vector<SimilarityExample> all_pos = {{"CCO", "CCO", 1}, {"CCN", "CCN", 1}};
  CHECK_THROWS_AS(pretrain_simnet(net, all_pos, cfg), DegenerateLabels);
  std::vector<SimilarityExample> all_neg = {{"CCO", "ccc", 0}, {"CCN", "sss", 0}};
  CHECK_THROWS_AS(pretrain_simnet(net, all_neg, cfg), DegenerateLabels);
  std::vector<SimilarityExample> bad_label = {{"CCO", "CCO", 2}, {"CCN", "ccc", 0}};
  CHECK_THROWS_AS(pretrain_simnet(net, bad_label, cfg), RangeError);
}

TEST_CASE("simnet pre-training is deterministic under a fixed seed") {
  const std::vector<SimilarityExample> corpus = separable_pairs(10);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 14;
  Rng init_a(15);
  SimNet a(8, vocab::size(), init_a);
  const SimnetPretrainResult ra = pretrain_simnet(a, corpus, cfg);
  Rng init_b(15);
  SimNet b(8, vocab::size(), init_b);
  const SimnetPretrainResult rb = pretrain_simnet(b, corpus, cfg);
  CHECK(ra.dev_accuracy == rb.dev_accuracy);
  REQUIRE(ra.report.rows.size() == rb.report.rows.size());
  for (size_t i = 0; i < ra.report.rows.size(); ++i) {
    CHECK(ra.report.rows[i].ls == rb.report.rows[i].ls);
  }
}

TEST_CASE("propnet checkpoints round-trip through save and load") {
  Rng corpus_rng(105);
  const std::vector<PropertyExample> corpus = make_property_corpus(corpus_rng, 30);
  Rng init(16);
  PropNet net(8, vocab::size(), init);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.seed = 17;
  const PropnetPretrainResult res = pretrain_propnet(net, corpus, cfg);

  TempFile f("propnet.ckpt");
  save_propnet(net, res.scaler, f.path);
  const PropnetArtifacts loaded = load_propnet(f.path);
  CHECK(loaded.scaler.shift() == res.scaler.shift());
  CHECK(loaded.scaler.scale() == res.scaler.scale());
  const auto orig = std::as_const(net).params();
  const auto back = std::as_const(*loaded.net).params();
  REQUIRE(orig.size() == back.size());
  for (size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i]->name == back[i]->name);
    CHECK(orig[i]->value.v == back[i]->value.v);
  }
  const TokenSequence probe = strip_begin(tokenize("CCO", 24));
  CHECK(net.forward({probe}).v == loaded.net->forward({probe}).v);
}

TEST_CASE("simnet checkpoints round-trip through save and load") {
  Rng init(18);
  SimNet net(8, vocab::size(), init);
  TempFile f("simnet.ckpt");
  save_simnet(net, f.path);
  const std::unique_ptr<SimNet> loaded = load_simnet(f.path);
  const TokenSequence a = strip_begin(tokenize("CCO", 24));
  const TokenSequence b = strip_begin(tokenize("CCN", 24));
  CHECK(net.forward_pair(a, b) == loaded->forward_pair(a, b));
}

TEST_CASE("checkpoint loaders reject wrong kinds and drifted configs") {
  Rng init(19);
  SimNet simnet(8, vocab::size(), init);
  TempFile f("kind.ckpt");
  save_simnet(simnet, f.path);
  CHECK_THROWS_AS(load_propnet(f.path), ConfigMismatch);

  // Tamper with the sibling config: the hash no longer matches.
  KvConfig cfg = read_config_file(f.path + ".config");
  cfg["d"] = "16";
  write_config_file(f.path + ".config", cfg);
  CHECK_THROWS_AS(load_simnet(f.path), ConfigMismatch);
}

TEST_CASE("assembly freezes constraint nets and filters trainable parameters") {
  CmgModel model = tiny_model(21);
  CHECK(model.propnet->frozen());
  CHECK(model.simnet->frozen());
  for (const Parameter* p : std::as_const(*model.propnet).params()) CHECK(p->frozen);
  const size_t translator_count = model.translator->params().size();
  const auto trainable = model.trainable_params();
  CHECK(trainable.size() == translator_count);
  for (const Parameter* p : trainable) CHECK_FALSE(p->frozen);
}

TEST_CASE("assembly rejects vocabulary and scaler mismatches") {
  TranslatorConfig cfg = tiny_translator_config();
  Rng rng(22);
  auto translator = std::make_unique<Translator>(cfg, rng);
  auto propnet = std::make_unique<PropNet>(4, vocab::size() - 1, rng);
  auto simnet = std::make_unique<SimNet>(4, vocab::size(), rng);
  CHECK_THROWS_AS(assemble_cmg(std::move(translator), std::move(propnet), std::move(simnet),
                               identity_scaler()),
                  VocabMismatch);

  Rng rng2(23);
  auto translator2 = std::make_unique<Translator>(cfg, rng2);
  auto propnet2 = std::make_unique<PropNet>(4, vocab::size(), rng2);
  auto simnet2 = std::make_unique<SimNet>(4, vocab::size(), rng2);
  CHECK_THROWS_AS(assemble_cmg(std::move(translator2), std::move(propnet2), std::move(simnet2),
                               PropertyScaler()),
                  UnfittedScaler);
}

TEST_CASE("cmg loss composes its parts with the configured weights") {
  CmgModel model = tiny_model(24);
  const CmgBatch batch = two_pair_batch();

  const CmgLossValues zero = cmg_loss(model, batch, 0.0, 0.0);
  CHECK(zero.lcmg == zero.lt);  // bitwise: the total IS the translation loss
  CHECK(zero.lt >= 0.0);
  CHECK(zero.lp >= 0.0);
  CHECK(zero.ls >= 0.0);

  const CmgLossValues unit = cmg_loss(model, batch, 1.0, 1.0);
  CHECK(unit.lcmg == (unit.lt + unit.lp) + unit.ls);
  CHECK(unit.lt == zero.lt);

  const CmgLossValues mixed = cmg_loss(model, batch, 0.5, 0.25);
  CHECK(mixed.lcmg == (mixed.lt + 0.5 * mixed.lp) + 0.25 * mixed.ls);

  // Pure function of (model, batch): a second evaluation is bit-identical.
  const CmgLossValues again = cmg_loss(model, batch, 0.5, 0.25);
  CHECK(again.lcmg == mixed.lcmg);
}

TEST_CASE("cmg loss input validation") {
  CmgModel model = tiny_model(25);
  CmgBatch batch = two_pair_batch();
  Tape t;
  CHECK_THROWS_AS(cmg_loss_graph(t, model, CmgBatch{}, 0.5, 0.5), EmptyCorpus);
  CHECK_THROWS_AS(cmg_loss_graph(t, model, batch, -0.5, 0.5), RangeError);
  CmgBatch ragged = batch;
  ragged.py.pop_back();
  CHECK_THROWS_AS(cmg_loss_graph(t, model, ragged, 0.5, 0.5), ShapeMismatch);
}

TEST_CASE("composite loss gradients match finite differences on a 2-pair batch") {
  CmgModel model = tiny_model(26);
  const CmgBatch batch = two_pair_batch();
  auto build = [&](Tape& t) { return cmg_loss_graph(t, model, batch, 0.5, 0.5).lcmg; };
  molgen::testing::check_gradients_fd(build, model.all_params(), 1e-3, 1e-5);
}

TEST_CASE("train_cmg overfits a small corpus and its loss decreases by windows") {
  Rng corpus_rng(106);
  const std::vector<PairRow> corpus = make_pair_corpus(corpus_rng, 10, 14);
  CmgModel model = tiny_model(27, 16, 4);
  TrainConfig cfg;
  cfg.lambda_p = 0.0;
  cfg.lambda_s = 0.0;
  cfg.batch = 3;
  cfg.lr = 2e-3;
  cfg.max_epochs = 150;
  cfg.patience = 150;
  cfg.dev_fraction = 0.0;  // overfit mode: dev == train
  cfg.seed = 7;
  const TrainReport report = train_cmg(model, corpus, cfg);

  const CmgBatch all = make_cmg_batch(corpus, model.translator->config().M);
  CHECK(token_accuracy(model, all) >= 0.99);

  // Mean train loss over consecutive 10-epoch windows decreases.
  std::vector<double> train_lcmg;
  for (const auto& r : report.rows) {
    if (r.split == "train") train_lcmg.push_back(r.lcmg);
  }
  REQUIRE(train_lcmg.size() == 150);
  double prev = std::numeric_limits<double>::infinity();
  for (size_t w = 0; w + 10 <= train_lcmg.size(); w += 10) {
    double mean = 0.0;
    for (size_t i = w; i < w + 10; ++i) mean += train_lcmg[i];
    mean /= 10.0;
    INFO("window ", w / 10, ": mean ", mean, " previous ", prev);
    CHECK(mean < prev);
    prev = mean;
  }

  // Early-stopping contract: the chosen epoch carries the minimum dev loss.
  CHECK(dev_row_at(report, report.chosen_epoch).lcmg ==
        doctest::Approx(min_dev_column(report, &TrainReport::Row::lcmg)).epsilon(1e-12));
}

TEST_CASE("train_cmg leaves frozen tensors bit-identical and is deterministic") {
  Rng corpus_rng(107);
  const std::vector<PairRow> corpus = make_pair_corpus(corpus_rng, 10);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 4;
  cfg.seed = 29;

  CmgModel a = tiny_model(30);
  std::vector<std::vector<double>> frozen_before;
  for (const Parameter* p : std::as_const(*a.propnet).params()) frozen_before.push_back(p->value.v);
  for (const Parameter* p : std::as_const(*a.simnet).params()) frozen_before.push_back(p->value.v);
  const TrainReport ra = train_cmg(a, corpus, cfg);

  size_t idx = 0;
  for (const Parameter* p : std::as_const(*a.propnet).params()) {
    CHECK(p->value.v == frozen_before[idx++]);
  }
  for (const Parameter* p : std::as_const(*a.simnet).params()) {
    CHECK(p->value.v == frozen_before[idx++]);
  }

  CmgModel b = tiny_model(30);
  const TrainReport rb = train_cmg(b, corpus, cfg);
  REQUIRE(ra.rows.size() == rb.rows.size());
  for (size_t i = 0; i < ra.rows.size(); ++i) {
    CHECK(ra.rows[i].lcmg == rb.rows[i].lcmg);
    CHECK(ra.rows[i].lt == rb.rows[i].lt);
  }
  CHECK(ra.chosen_epoch == rb.chosen_epoch);
  const auto pa = std::as_const(*a.translator).params();
  const auto pb = std::as_const(*b.translator).params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.v == pb[i]->value.v);

  CHECK_THROWS_AS(train_cmg(a, {}, cfg), EmptyCorpus);
}

TEST_CASE("cmg checkpoints round-trip and the trainer persists its best") {
  Rng corpus_rng(108);
  const std::vector<PairRow> corpus = make_pair_corpus(corpus_rng, 8);
  CmgModel model = tiny_model(31);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  cfg.seed = 32;
  TempFile f("cmg.ckpt");
  train_cmg(model, corpus, cfg, f.path);

  CmgModel loaded = load_cmg(f.path);
  const auto orig = std::as_const(model).all_params();
  const auto back = std::as_const(loaded).all_params();
  REQUIRE(orig.size() == back.size());
  for (size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i]->name == back[i]->name);
    CHECK(orig[i]->value.v == back[i]->value.v);
    CHECK(orig[i]->frozen == back[i]->frozen);
  }
  CHECK(loaded.scaler.shift() == model.scaler.shift());

  const CmgBatch batch = two_pair_batch();
  const CmgLossValues va = cmg_loss(model, batch, 0.5, 0.5);
  const CmgLossValues vb = cmg_loss(loaded, batch, 0.5, 0.5);
  CHECK(va.lcmg == vb.lcmg);

  // Drifted sibling config is rejected.
  KvConfig kv = read_config_file(f.path + ".config");
  kv["translator.d"] = "32";
  write_config_file(f.path + ".config", kv);
  CHECK_THROWS_AS(load_cmg(f.path), ConfigMismatch);
}
