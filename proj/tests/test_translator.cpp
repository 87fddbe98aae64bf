// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "fd_check.hpp"
#include "molgen/chem.hpp"
#include "molgen/errors.hpp"
#include "molgen/translator.hpp"

using namespace molgen;

namespace {

TranslatorConfig tiny_config() {
  TranslatorConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.ff = 16;
  cfg.V = vocab::size();
  cfg.M = 24;
  return cfg;
}

PropertyVector props(double a, double b, double c) {
  PropertyVector p;
  p.plogp = a;
  p.qed = b;
  p.drd2 = c;
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  TranslatorConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.d = 9;  // not divisible by 2 heads
  CHECK_THROWS_AS(cfg.validate(), ConfigMismatch);
  cfg = tiny_config();
  cfg.M = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigMismatch);
  cfg = tiny_config();
  cfg.k = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigMismatch);

  KvConfig kv;
  tiny_config().to_config(kv, "translator.");
  const TranslatorConfig back = TranslatorConfig::from_config(kv, "translator.");
  CHECK(back.d == 8);
  CHECK(back.M == 24);
}

TEST_CASE("encoder output width is d + 2k at every position") {
  TranslatorConfig cfg = tiny_config();
  cfg.d = 32;
  Rng rng(1);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("CC(=O)O", cfg.M);
  const EncoderOutput enc = tr.encode(x, props(0.1, 0.2, 0.3), props(0.4, 0.5, 0.6));
  CHECK(enc.z.cols == 38);  // 32 + 2*3
  CHECK(enc.z.rows == static_cast<int>(x.size()));
}

TEST_CASE("changing target properties touches exactly the appended columns") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(2);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("CCO", cfg.M);
  const PropertyVector px = props(0.1, -0.2, 0.3);
  const EncoderOutput a = tr.encode(x, px, props(1.0, 2.0, 3.0));
  const EncoderOutput b = tr.encode(x, px, props(-1.0, 0.0, 5.0));
  REQUIRE(a.z.rows == b.z.rows);
  for (int i = 0; i < a.z.rows; ++i) {
    for (int j = 0; j < cfg.d; ++j) CHECK(a.z.at(i, j) == b.z.at(i, j));
    for (int j = 0; j < cfg.k; ++j) {
      CHECK(a.z.at(i, cfg.d + j) == b.z.at(i, cfg.d + j));  // p_X half unchanged
    }
    bool any_diff = false;
    for (int j = 0; j < cfg.k; ++j) {
      if (a.z.at(i, cfg.d + cfg.k + j) != b.z.at(i, cfg.d + cfg.k + j)) any_diff = true;
    }
    CHECK(any_diff);
  }
}

TEST_CASE("encode is deterministic") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(3);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("c1ccccc1", cfg.M);
  const EncoderOutput a = tr.encode(x, props(0, 0, 0), props(1, 1, 1));
  const EncoderOutput b = tr.encode(x, props(0, 0, 0), props(1, 1, 1));
  CHECK(a.z.v == b.z.v);
}

TEST_CASE("attention probabilities are row-stochastic and masks bind") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(4);
  Translator tr(cfg, rng);

  Tape t;
  Tensor x(5, cfg.d);
  Rng fill(5);
  for (double& v : x.v) v = fill.uniform(-1.0, 1.0);
  const int xn = t.constant(x);
  AttentionParams ap;
  Parameter wq = make_matrix_param("wq", cfg.d, cfg.d, rng);
  Parameter bq = make_bias_param("bq", cfg.d);
  Parameter wk = make_matrix_param("wk", cfg.d, cfg.d, rng);
  Parameter bk = make_bias_param("bk", cfg.d);
  Parameter wv = make_matrix_param("wv", cfg.d, cfg.d, rng);
  Parameter bv = make_bias_param("bv", cfg.d);
  Parameter wo = make_matrix_param("wo", cfg.d, cfg.d, rng);
  Parameter bo = make_bias_param("bo", cfg.d);
  ap.wq = &wq;
  ap.bq = &bq;
  ap.wk = &wk;
  ap.bk = &bk;
  ap.wv = &wv;
  ap.bv = &bv;
  ap.wo = &wo;
  ap.bo = &bo;

  std::vector<Tensor> probs;
  multi_head_attention(t, ap, xn, xn, causal_mask(5), cfg.heads, &probs);
  REQUIRE(static_cast<int>(probs.size()) == cfg.heads);
  for (const Tensor& p : probs) {
    for (int i = 0; i < p.rows; ++i) {
      double sum = 0.0;
      for (int j = 0; j < p.cols; ++j) {
        sum += p.at(i, j);
        if (j > i) CHECK(p.at(i, j) == doctest::Approx(0.0).epsilon(1e-12));  // masked out
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("single position single head reduces to the value projection") {
  const int d = 6;
  Rng rng(6);
  Parameter wq = make_matrix_param("wq", d, d, rng);
  Parameter bq = make_bias_param("bq", d);
  Parameter wk = make_matrix_param("wk", d, d, rng);
  Parameter bk = make_bias_param("bk", d);
  Parameter wv = make_matrix_param("wv", d, d, rng);
  Parameter bv = make_bias_param("bv", d);
  Parameter wo("wo", Tensor(d, d));
  for (int i = 0; i < d; ++i) wo.value.at(i, i) = 1.0;  // identity out-projection
  Parameter bo = make_bias_param("bo", d);
  AttentionParams ap{&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo};

  Tape t;
  Tensor x(1, d);
  for (int j = 0; j < d; ++j) x.at(0, j) = 0.1 * (j + 1);
  const int xn = t.constant(x);
  const int out = multi_head_attention(t, ap, xn, xn, Tensor(1, 1), 1);
  const int vproj = t.add(t.matmul(xn, t.leaf(wv)), t.leaf(bv));
  for (int j = 0; j < d; ++j) {
    CHECK(t.value(out).at(0, j) == doctest::Approx(t.value(vproj).at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("decoder is causal in its prefix") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(7);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("CCO", cfg.M);
  const EncoderOutput enc = tr.encode(x, props(0, 0, 0), props(0, 0, 0));

  TokenSequence a = tokenize("CCCCC", cfg.M);  // [BEGIN] C C C C C [END]
  TokenSequence b = a;
  b[4] = vocab::char_to_id('O');  // perturb a later position

  Tape ta, tb;
  const int la = tr.decode_graph(ta, ta.constant(enc.z), a);
  const int lb = tr.decode_graph(tb, tb.constant(enc.z), b);
  // Steps before the perturbed index see identical logits; later steps move.
  for (int step = 0; step < 4; ++step) {
    for (int vtok = 0; vtok < cfg.V; ++vtok) {
      CHECK(ta.value(la).at(step, vtok) == tb.value(lb).at(step, vtok));
    }
  }
  bool later_diff = false;
  for (int step = 4; step < ta.value(la).rows; ++step) {
    for (int vtok = 0; vtok < cfg.V; ++vtok) {
      if (ta.value(la).at(step, vtok) != tb.value(lb).at(step, vtok)) later_diff = true;
    }
  }
  CHECK(later_diff);
}

TEST_CASE("decode_step returns finite logits that normalize") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(8);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("CCN", cfg.M);
  const EncoderOutput enc = tr.encode(x, props(0.2, 0.1, 0.0), props(0.5, 0.1, 0.0));
  const Tensor logits = tr.decode_step(enc, {vocab::kBegin, vocab::char_to_id('C')});
  REQUIRE(logits.cols == cfg.V);
  double sum = 0.0;
  double mx = logits.v[0];
  for (double v : logits.v) mx = std::max(mx, v);
  for (double v : logits.v) sum += std::exp(v - mx);
  CHECK(std::isfinite(sum));
  CHECK(sum > 0.0);

  CHECK_THROWS_AS(tr.decode_step(enc, {vocab::char_to_id('C')}), MalformedSequence);
  TokenSequence long_prefix(cfg.M, vocab::char_to_id('C'));
  long_prefix[0] = vocab::kBegin;
  CHECK_THROWS_AS(tr.decode_step(enc, long_prefix), TooLong);
}

TEST_CASE("sequences beyond M are rejected") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(9);
  Translator tr(cfg, rng);
  const std::string too_long(cfg.M, 'C');
  CHECK_THROWS_AS(tokenize(too_long, cfg.M), TooLong);
  TokenSequence manual(cfg.M + 1, vocab::char_to_id('C'));
  manual[0] = vocab::kBegin;
  Tape t;
  CHECK_THROWS_AS(tr.encode_graph(t, manual, props(0, 0, 0), props(0, 0, 0)), TooLong);
}

TEST_CASE("translation loss on uniform and sharp logits") {
  Tape t;
  // Uniform logits: every row all-zero -> per-position loss exactly ln V.
  const int V = vocab::size();
  const int uniform = t.constant(Tensor(4, V));
  const TokenSequence target = {22, 22, 27, vocab::kEnd};
  const int loss = translation_loss_graph(t, {uniform}, {target});
  CHECK(t.value(loss).v[0] == doctest::Approx(std::log(V)).epsilon(1e-9));

  // Sharp correct logits drive the loss toward zero.
  Tensor sharp(4, V);
  for (int i = 0; i < 4; ++i) sharp.at(i, target[static_cast<size_t>(i)]) = 50.0;
  const int loss2 = translation_loss_graph(t, {t.constant(sharp)}, {target});
  CHECK(t.value(loss2).v[0] == doctest::Approx(0.0).epsilon(1e-9));

  // V=4, probability 1/4 on the target -> ln 4.
  Tape t4;
  const int l4 = translation_loss_graph(t4, {t4.constant(Tensor(1, 4))}, {TokenSequence{2}});
  CHECK(t4.value(l4).v[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("translation loss skips padding in sum and count") {
  Tape t;
  const int V = vocab::size();
  const TokenSequence padded = {22, vocab::kEnd, vocab::kPad, vocab::kPad};
  const int loss = translation_loss_graph(t, {t.constant(Tensor(4, V))}, {padded});
  CHECK(t.value(loss).v[0] == doctest::Approx(std::log(V)).epsilon(1e-9));

  CHECK_THROWS_AS(
      translation_loss_graph(t, {t.constant(Tensor(2, V))}, {TokenSequence{0, 0}}),
      EmptySequence);
  CHECK_THROWS_AS(
      translation_loss_graph(t, {t.constant(Tensor(3, V))}, {TokenSequence{22, 2}}),
      ShapeMismatch);
}

TEST_CASE("teacher forcing split") {
  const TokenSequence full = tokenize("CCO", 16);
  const TokenSequence in = teacher_input(full);
  const TokenSequence tgt = teacher_target(full);
  CHECK(in == TokenSequence{1, 22, 22, 27});
  CHECK(tgt == TokenSequence{22, 22, 27, 2});
  CHECK_THROWS_AS(teacher_input(TokenSequence{1}), MalformedSequence);
}

TEST_CASE("translation loss gradient matches finite differences on a 2-sample batch") {
  TranslatorConfig cfg = tiny_config();
  Rng rng(10);
  Translator tr(cfg, rng);
  const TokenSequence x1 = tokenize("CCO", cfg.M);
  const TokenSequence y1 = tokenize("CCN", cfg.M);
  const TokenSequence x2 = tokenize("CC", cfg.M);
  const TokenSequence y2 = tokenize("C=O", cfg.M);
  const PropertyVector px = props(0.3, -0.1, 0.2);
  const PropertyVector py = props(-0.4, 0.8, 0.1);

  testing::check_gradients_fd(
      [&](Tape& t) {
        const int e1 = tr.encode_graph(t, x1, px, py);
        const int l1 = tr.decode_graph(t, e1, teacher_input(y1));
        const int e2 = tr.encode_graph(t, x2, py, px);
        const int l2 = tr.decode_graph(t, e2, teacher_input(y2));
        return translation_loss_graph(t, {l1, l2}, {teacher_target(y1), teacher_target(y2)});
      },
      tr.params(), 1e-4);
}

TEST_CASE("a few optimizer steps reduce the translation loss") {
  TranslatorConfig cfg = tiny_config();
  cfg.d = 16;
  cfg.ff = 32;
  Rng rng(11);
  Translator tr(cfg, rng);
  const TokenSequence x = tokenize("CCO", cfg.M);
  const TokenSequence y = tokenize("CCN", cfg.M);
  const PropertyVector px = props(0.1, 0.2, 0.3);
  const PropertyVector py = props(0.4, 0.5, 0.6);

  AdamOptimizer opt;
  opt.lr = 1e-2;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 30; ++step) {
    zero_grads(tr.params());
    Tape t;
    const int enc = tr.encode_graph(t, x, px, py);
    const int logits = tr.decode_graph(t, enc, teacher_input(y));
    const int loss = translation_loss_graph(t, {logits}, {teacher_target(y)});
    const double value = t.value(loss).v[0];
    if (step == 0) first = value;
    last = value;
    t.backward(loss);
    opt.step(tr.params());
  }
  CHECK(last < first * 0.5);
}
