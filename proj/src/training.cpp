// SPDX-License-Identifier: Apache-2.0

#include "molgen/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "molgen/errors.hpp"

namespace molgen {

void TrainConfig::validate() const {
  if (lambda_p < 0.0 || lambda_s < 0.0) throw RangeError("loss weights must be non-negative");
  if (!(lr > 0.0)) throw RangeError("learning rate must be positive");
  if (batch < 1) throw RangeError("batch size must be at least 1");
  if (max_epochs < 1) throw RangeError("max epochs must be at least 1");
  if (patience < 1) throw RangeError("patience must be at least 1");
  if (dev_fraction < 0.0 || dev_fraction >= 1.0) throw RangeError("dev fraction must be in [0,1)");
  if (max_len < 3) throw RangeError("max sequence length must be at least 3");
}

namespace {

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

// Seeded shuffle, then the tail becomes the dev split. dev_fraction 0 reuses
// the training indices for dev so overfit runs see every row.
void split_indices(int n, double dev_fraction, Rng& rng, std::vector<int>* train_idx,
                   std::vector<int>* dev_idx) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  rng.shuffle(idx);
  int n_dev = dev_fraction > 0.0 ? static_cast<int>(std::lround(n * dev_fraction)) : 0;
  if (dev_fraction > 0.0 && n_dev == 0) n_dev = 1;
  if (n - n_dev < 1) throw TooFewRows("corpus too small for a train/dev split");
  train_idx->assign(idx.begin(), idx.end() - n_dev);
  dev_idx->assign(idx.end() - n_dev, idx.end());
  if (dev_idx->empty()) *dev_idx = *train_idx;
}

std::vector<Tensor> snapshot_values(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore_values(const std::vector<Parameter*>& params, const std::vector<Tensor>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

Parameter scaler_pseudo(const std::string& name, const std::array<double, kNumProperties>& a) {
  Tensor t(1, kNumProperties);
  for (int d = 0; d < kNumProperties; ++d) t.at(0, d) = a[d];
  Parameter p(name, std::move(t));
  p.frozen = true;
  return p;
}

PropertyScaler scaler_from_checkpoint(const Checkpoint& ck) {
  const Tensor& shift = ck.get("scaler.shift").value;
  const Tensor& scale = ck.get("scaler.scale").value;
  if (shift.rows != 1 || shift.cols != kNumProperties || scale.rows != 1 ||
      scale.cols != kNumProperties) {
    throw FormatError("checkpoint scaler tensors have the wrong shape");
  }
  std::array<double, kNumProperties> sh{};
  std::array<double, kNumProperties> sc{};
  for (int d = 0; d < kNumProperties; ++d) {
    sh[static_cast<size_t>(d)] = shift.at(0, d);
    sc[static_cast<size_t>(d)] = scale.at(0, d);
  }
  return PropertyScaler(sh, sc);
}

void verify_model_kind(const KvConfig& cfg, const std::string& kind, const std::string& path) {
  if (config_str(cfg, "model") != kind) {
    throw ConfigMismatch(path + ": expected a " + kind + " checkpoint, found '" +
                         config_str(cfg, "model") + "'");
  }
}

uint64_t verify_hash(const Checkpoint& ck, const KvConfig& cfg, const std::string& path) {
  const uint64_t h = config_hash(cfg);
  if (ck.cfg_hash != h) {
    throw ConfigMismatch(path + ": checkpoint was written under a different config");
  }
  return h;
}

}  // namespace

void write_train_report(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open report file for writing: " + path);
  out << "# chosen_epoch=" << report.chosen_epoch << "\n";
  out << "# epoch\tlt\tlp\tls\tlcmg\tsplit\n";
  for (const auto& r : report.rows) {
    out << r.epoch << '\t' << fmt_double(r.lt) << '\t' << fmt_double(r.lp) << '\t'
        << fmt_double(r.ls) << '\t' << fmt_double(r.lcmg) << '\t' << r.split << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

TrainReport read_train_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report file: " + path);
  TrainReport report;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("chosen_epoch=");
      if (pos != std::string::npos) {
        report.chosen_epoch = std::atoi(line.c_str() + pos + 13);
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 6) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                       std::to_string(fields.size()));
    }
    TrainReport::Row r;
    r.epoch = static_cast<int>(parse_real(fields[0], path, line_no));
    r.lt = parse_real(fields[1], path, line_no);
    r.lp = parse_real(fields[2], path, line_no);
    r.ls = parse_real(fields[3], path, line_no);
    r.lcmg = parse_real(fields[4], path, line_no);
    if (fields[5] != "train" && fields[5] != "dev") {
      throw ParseError(path + ":" + std::to_string(line_no) + ": split must be train or dev");
    }
    r.split = fields[5];
    report.rows.push_back(std::move(r));
  }
  return report;
}

PropnetPretrainResult pretrain_propnet(PropNet& net, const std::vector<PropertyExample>& corpus,
                                       const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.size() < 2) throw EmptyCorpus("pretrain_propnet needs at least 2 rows");

  std::vector<TokenSequence> tokens;
  tokens.reserve(corpus.size());
  for (const auto& ex : corpus) tokens.push_back(strip_begin(tokenize(ex.smiles, cfg.max_len)));

  Rng rng(cfg.seed);
  std::vector<int> train_idx;
  std::vector<int> dev_idx;
  split_indices(static_cast<int>(corpus.size()), cfg.dev_fraction, rng, &train_idx, &dev_idx);

  std::vector<PropertyVector> train_props;
  train_props.reserve(train_idx.size());
  for (int i : train_idx) train_props.push_back(corpus[static_cast<size_t>(i)].props);
  const PropertyScaler scaler = PropertyScaler::fit(train_props);

  std::vector<PropertyVector> normalized(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) normalized[i] = scaler.normalize(corpus[i].props);

  auto params = net.params();
  AdamOptimizer opt;
  opt.lr = cfg.lr;

  // Per-entry dev MSE in normalized units, evaluated in cfg.batch chunks.
  auto dev_mse = [&]() {
    double sum = 0.0;
    for (size_t start = 0; start < dev_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(dev_idx.size(), start + static_cast<size_t>(cfg.batch));
      std::vector<TokenSequence> chunk;
      for (size_t i = start; i < stop; ++i) chunk.push_back(tokens[static_cast<size_t>(dev_idx[i])]);
      const Tensor pred = net.forward(chunk);
      for (size_t i = start; i < stop; ++i) {
        const PropertyVector& target = normalized[static_cast<size_t>(dev_idx[i])];
        for (int d = 0; d < kNumProperties; ++d) {
          const double diff = pred.at(static_cast<int>(i - start), d) - target[d];
          sum += diff * diff;
        }
      }
    }
    return sum / (static_cast<double>(dev_idx.size()) * kNumProperties);
  };

  PropnetPretrainResult result;
  result.scaler = scaler;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values = snapshot_values(params);
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double train_sum = 0.0;
    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch));
      std::vector<TokenSequence> chunk;
      std::vector<PropertyVector> targets;
      for (size_t i = start; i < stop; ++i) {
        chunk.push_back(tokens[static_cast<size_t>(train_idx[i])]);
        targets.push_back(normalized[static_cast<size_t>(train_idx[i])]);
      }
      zero_grads(params);
      Tape t;
      const int loss = propnet_loss_graph(t, net.forward_graph(t, chunk), targets);
      t.backward(loss);
      opt.step(params);
      train_sum += t.value(loss).v[0] * static_cast<double>(stop - start);
    }
    const double train_loss =
        train_sum / (static_cast<double>(train_idx.size()) * kNumProperties);
    const double dev_loss = dev_mse();

    TrainReport::Row row;
    row.epoch = epoch;
    row.lp = train_loss;
    row.lcmg = train_loss;
    row.split = "train";
    result.report.rows.push_back(row);
    row.lp = dev_loss;
    row.lcmg = dev_loss;
    row.split = "dev";
    result.report.rows.push_back(row);

    if (dev_loss < best) {
      best = dev_loss;
      best_values = snapshot_values(params);
      result.report.chosen_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  restore_values(params, best_values);
  result.dev_mse = best;
  return result;
}

SimnetPretrainResult pretrain_simnet(SimNet& net, const std::vector<SimilarityExample>& corpus,
                                     const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.size() < 2) throw EmptyCorpus("pretrain_simnet needs at least 2 rows");
  bool any_pos = false;
  bool any_neg = false;
  for (const auto& ex : corpus) {
    if (ex.label != 0 && ex.label != 1) throw RangeError("similarity labels must be 0 or 1");
    (ex.label == 1 ? any_pos : any_neg) = true;
  }
  if (!any_pos || !any_neg) {
    throw DegenerateLabels("similarity corpus contains a single class");
  }

  std::vector<TokenSequence> xa(corpus.size());
  std::vector<TokenSequence> xb(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    xa[i] = strip_begin(tokenize(corpus[i].x_smiles, cfg.max_len));
    xb[i] = strip_begin(tokenize(corpus[i].y_smiles, cfg.max_len));
  }

  Rng rng(cfg.seed);
  std::vector<int> train_idx;
  std::vector<int> dev_idx;
  split_indices(static_cast<int>(corpus.size()), cfg.dev_fraction, rng, &train_idx, &dev_idx);

  auto params = net.params();
  AdamOptimizer opt;
  opt.lr = cfg.lr;

  auto dev_metrics = [&]() {  // (mean BCE, accuracy)
    double bce = 0.0;
    int correct = 0;
    for (size_t start = 0; start < dev_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(dev_idx.size(), start + static_cast<size_t>(cfg.batch));
      std::vector<TokenSequence> a;
      std::vector<TokenSequence> b;
      for (size_t i = start; i < stop; ++i) {
        a.push_back(xa[static_cast<size_t>(dev_idx[i])]);
        b.push_back(xb[static_cast<size_t>(dev_idx[i])]);
      }
      const Tensor pred = net.forward(a, b);
      for (size_t i = start; i < stop; ++i) {
        const int label = corpus[static_cast<size_t>(dev_idx[i])].label;
        const double p =
            std::clamp(pred.at(static_cast<int>(i - start), 0), 1e-7, 1.0 - 1e-7);
        bce -= label == 1 ? std::log(p) : std::log(1.0 - p);
        if ((p > 0.5) == (label == 1)) ++correct;
      }
    }
    return std::pair<double, double>(bce / static_cast<double>(dev_idx.size()),
                                     static_cast<double>(correct) /
                                         static_cast<double>(dev_idx.size()));
  };

  SimnetPretrainResult result;
  double best = -1.0;
  std::vector<Tensor> best_values = snapshot_values(params);
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double train_sum = 0.0;
    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch));
      std::vector<TokenSequence> a;
      std::vector<TokenSequence> b;
      std::vector<int> labels;
      for (size_t i = start; i < stop; ++i) {
        const size_t row = static_cast<size_t>(train_idx[i]);
        a.push_back(xa[row]);
        b.push_back(xb[row]);
        labels.push_back(corpus[row].label);
      }
      zero_grads(params);
      Tape t;
      const int loss = simnet_loss_graph(t, net.forward_graph(t, a, b), labels);
      t.backward(loss);
      opt.step(params);
      train_sum += t.value(loss).v[0] * static_cast<double>(stop - start);
    }
    const double train_loss = train_sum / static_cast<double>(train_idx.size());
    const auto [dev_loss, dev_acc] = dev_metrics();

    TrainReport::Row row;
    row.epoch = epoch;
    row.ls = train_loss;
    row.lcmg = train_loss;
    row.split = "train";
    result.report.rows.push_back(row);
    row.ls = dev_loss;
    row.lcmg = dev_loss;
    row.split = "dev";
    result.report.rows.push_back(row);

    if (dev_acc > best) {
      best = dev_acc;
      best_values = snapshot_values(params);
      result.report.chosen_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  restore_values(params, best_values);
  result.dev_accuracy = best;
  return result;
}

void save_propnet(const PropNet& net, const PropertyScaler& scaler, const std::string& path) {
  if (!scaler.fitted()) throw UnfittedScaler("save_propnet needs a fitted scaler");
  KvConfig cfg;
  cfg["model"] = "propnet";
  cfg["d"] = std::to_string(net.d());
  cfg["vocab"] = std::to_string(net.V());
  const Parameter shift = scaler_pseudo("scaler.shift", scaler.shift());
  const Parameter scale = scaler_pseudo("scaler.scale", scaler.scale());
  std::vector<const Parameter*> params = net.params();
  params.push_back(&shift);
  params.push_back(&scale);
  save_checkpoint(path, params, config_hash(cfg));
  write_config_file(path + ".config", cfg);
}

void save_simnet(const SimNet& net, const std::string& path) {
  KvConfig cfg;
  cfg["model"] = "simnet";
  cfg["d"] = std::to_string(net.d());
  cfg["vocab"] = std::to_string(net.V());
  save_checkpoint(path, net.params(), config_hash(cfg));
  write_config_file(path + ".config", cfg);
}

PropnetArtifacts load_propnet(const std::string& path) {
  const KvConfig cfg = read_config_file(path + ".config");
  verify_model_kind(cfg, "propnet", path);
  const Checkpoint ck = load_checkpoint(path);
  verify_hash(ck, cfg, path);
  Rng rng(0);
  PropnetArtifacts out;
  out.net = std::make_unique<PropNet>(config_int(cfg, "d"), config_int(cfg, "vocab"), rng);
  restore_parameters(ck, out.net->params());
  out.scaler = scaler_from_checkpoint(ck);
  return out;
}

std::unique_ptr<SimNet> load_simnet(const std::string& path) {
  const KvConfig cfg = read_config_file(path + ".config");
  verify_model_kind(cfg, "simnet", path);
  const Checkpoint ck = load_checkpoint(path);
  verify_hash(ck, cfg, path);
  Rng rng(0);
  auto net = std::make_unique<SimNet>(config_int(cfg, "d"), config_int(cfg, "vocab"), rng);
  restore_parameters(ck, net->params());
  return net;
}

KvConfig CmgModel::to_config() const {
  KvConfig cfg;
  cfg["model"] = "cmg";
  translator->config().to_config(cfg, "translator.");
  cfg["propnet.d"] = std::to_string(propnet->d());
  cfg["simnet.d"] = std::to_string(simnet->d());
  return cfg;
}

std::vector<Parameter*> CmgModel::all_params() {
  std::vector<Parameter*> out = translator->params();
  for (Parameter* p : propnet->params()) out.push_back(p);
  for (Parameter* p : simnet->params()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> CmgModel::all_params() const {
  std::vector<const Parameter*> out = std::as_const(*translator).params();
  for (const Parameter* p : std::as_const(*propnet).params()) out.push_back(p);
  for (const Parameter* p : std::as_const(*simnet).params()) out.push_back(p);
  return out;
}

std::vector<Parameter*> CmgModel::trainable_params() {
  std::vector<Parameter*> out;
  for (Parameter* p : all_params()) {
    if (!p->frozen) out.push_back(p);
  }
  return out;
}

CmgModel assemble_cmg(std::unique_ptr<Translator> translator, std::unique_ptr<PropNet> propnet,
                      std::unique_ptr<SimNet> simnet, PropertyScaler scaler) {
  const int V = translator->config().V;
  if (propnet->V() != V || simnet->V() != V) {
    throw VocabMismatch("constraint-net vocabulary (" + std::to_string(propnet->V()) + "/" +
                        std::to_string(simnet->V()) + ") differs from the translator's (" +
                        std::to_string(V) + ")");
  }
  if (!scaler.fitted()) throw UnfittedScaler("assemble_cmg needs a fitted property scaler");
  propnet->freeze();
  simnet->freeze();
  CmgModel model;
  model.translator = std::move(translator);
  model.propnet = std::move(propnet);
  model.simnet = std::move(simnet);
  model.scaler = scaler;
  return model;
}

void save_cmg(const CmgModel& model, const std::string& path) {
  const KvConfig cfg = model.to_config();
  const Parameter shift = scaler_pseudo("scaler.shift", model.scaler.shift());
  const Parameter scale = scaler_pseudo("scaler.scale", model.scaler.scale());
  std::vector<const Parameter*> params = model.all_params();
  params.push_back(&shift);
  params.push_back(&scale);
  save_checkpoint(path, params, config_hash(cfg));
  write_config_file(path + ".config", cfg);
}

CmgModel load_cmg(const std::string& path) {
  const KvConfig cfg = read_config_file(path + ".config");
  verify_model_kind(cfg, "cmg", path);
  const Checkpoint ck = load_checkpoint(path);
  verify_hash(ck, cfg, path);
  const TranslatorConfig tc = TranslatorConfig::from_config(cfg, "translator.");
  Rng rng(0);
  auto translator = std::make_unique<Translator>(tc, rng);
  auto propnet = std::make_unique<PropNet>(config_int(cfg, "propnet.d"), tc.V, rng);
  auto simnet = std::make_unique<SimNet>(config_int(cfg, "simnet.d"), tc.V, rng);
  CmgModel model = assemble_cmg(std::move(translator), std::move(propnet), std::move(simnet),
                                scaler_from_checkpoint(ck));
  restore_parameters(ck, model.all_params());
  return model;
}

CmgBatch make_cmg_batch(const std::vector<PairRow>& rows, int max_len) {
  CmgBatch batch;
  batch.x.reserve(rows.size());
  batch.y.reserve(rows.size());
  for (const PairRow& r : rows) {
    batch.x.push_back(tokenize(r.x_smiles, max_len));
    batch.y.push_back(tokenize(r.y_smiles, max_len));
    batch.px.push_back(r.px);
    batch.py.push_back(r.py);
  }
  return batch;
}

CmgLossNodes cmg_loss_graph(Tape& t, CmgModel& model, const CmgBatch& batch, double lambda_p,
                            double lambda_s) {
  if (lambda_p < 0.0 || lambda_s < 0.0) throw RangeError("loss weights must be non-negative");
  if (batch.size() == 0) throw EmptyCorpus("cmg loss needs a non-empty batch");
  if (batch.y.size() != batch.x.size() || batch.px.size() != batch.x.size() ||
      batch.py.size() != batch.x.size()) {
    throw ShapeMismatch("cmg batch arrays have unequal lengths");
  }

  std::vector<int> logit_nodes;
  std::vector<TokenSequence> targets;
  std::vector<int> prop_preds;
  std::vector<int> sim_preds;
  std::vector<PropertyVector> prop_targets;
  for (int i = 0; i < batch.size(); ++i) {
    const size_t s = static_cast<size_t>(i);
    const PropertyVector pxn = model.scaler.normalize(batch.px[s]);
    const PropertyVector pyn = model.scaler.normalize(batch.py[s]);
    const int enc = model.translator->encode_graph(t, batch.x[s], pxn, pyn);
    const int logits = model.translator->decode_graph(t, enc, teacher_input(batch.y[s]));
    logit_nodes.push_back(logits);
    targets.push_back(teacher_target(batch.y[s]));
    const int soft = t.softmax(logits);
    prop_preds.push_back(model.propnet->forward_soft_graph(t, soft));
    prop_targets.push_back(pyn);
    sim_preds.push_back(model.simnet->forward_soft_graph(t, strip_begin(batch.x[s]), soft));
  }

  CmgLossNodes nodes;
  nodes.lt = translation_loss_graph(t, logit_nodes, targets);
  nodes.lp = propnet_loss_graph(t, t.concat(prop_preds, 0), prop_targets);
  const std::vector<int> ones(static_cast<size_t>(batch.size()), 1);
  nodes.ls = simnet_loss_graph(t, t.concat(sim_preds, 0), ones);
  nodes.lcmg = nodes.lt;
  if (lambda_p > 0.0) nodes.lcmg = t.add(nodes.lcmg, t.scale(nodes.lp, lambda_p));
  if (lambda_s > 0.0) nodes.lcmg = t.add(nodes.lcmg, t.scale(nodes.ls, lambda_s));
  return nodes;
}

CmgLossValues cmg_loss(CmgModel& model, const CmgBatch& batch, double lambda_p, double lambda_s) {
  Tape t;
  const CmgLossNodes nodes = cmg_loss_graph(t, model, batch, lambda_p, lambda_s);
  CmgLossValues v;
  v.lt = t.value(nodes.lt).v[0];
  v.lp = t.value(nodes.lp).v[0];
  v.ls = t.value(nodes.ls).v[0];
  v.lcmg = t.value(nodes.lcmg).v[0];
  return v;
}

double token_accuracy(CmgModel& model, const CmgBatch& batch) {
  if (batch.size() == 0) throw EmptyCorpus("token accuracy needs a non-empty batch");
  int hits = 0;
  int total = 0;
  for (int i = 0; i < batch.size(); ++i) {
    const size_t s = static_cast<size_t>(i);
    Tape t;
    const int enc = model.translator->encode_graph(t, batch.x[s],
                                                   model.scaler.normalize(batch.px[s]),
                                                   model.scaler.normalize(batch.py[s]));
    const Tensor logits = t.value(model.translator->decode_graph(t, enc, teacher_input(batch.y[s])));
    const TokenSequence target = teacher_target(batch.y[s]);
    for (int row = 0; row < logits.rows; ++row) {
      int arg = 0;
      for (int j = 1; j < logits.cols; ++j) {
        if (logits.at(row, j) > logits.at(row, arg)) arg = j;
      }
      hits += arg == target[static_cast<size_t>(row)] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

TrainReport train_cmg(CmgModel& model, const std::vector<PairRow>& corpus, const TrainConfig& cfg,
                      const std::string& checkpoint_path) {
  cfg.validate();
  if (corpus.empty()) throw EmptyCorpus("train_cmg needs a non-empty pair corpus");
  const CmgBatch all = make_cmg_batch(corpus, model.translator->config().M);

  Rng rng(cfg.seed);
  std::vector<int> train_idx;
  std::vector<int> dev_idx;
  split_indices(all.size(), cfg.dev_fraction, rng, &train_idx, &dev_idx);

  auto subset = [&](const std::vector<int>& idx, size_t start, size_t stop) {
    CmgBatch sub;
    for (size_t i = start; i < stop; ++i) {
      const size_t row = static_cast<size_t>(idx[i]);
      sub.x.push_back(all.x[row]);
      sub.y.push_back(all.y[row]);
      sub.px.push_back(all.px[row]);
      sub.py.push_back(all.py[row]);
    }
    return sub;
  };

  auto all_ps = model.all_params();
  auto trainable = model.trainable_params();
  AdamOptimizer opt;
  opt.lr = cfg.lr;

  auto eval_split = [&](const std::vector<int>& idx) {
    CmgLossValues acc;
    for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(idx.size(), start + static_cast<size_t>(cfg.batch));
      CmgBatch sub = subset(idx, start, stop);
      const CmgLossValues v = cmg_loss(model, sub, cfg.lambda_p, cfg.lambda_s);
      const double w = static_cast<double>(stop - start);
      acc.lt += v.lt * w;
      acc.lp += v.lp * w;
      acc.ls += v.ls * w;
      acc.lcmg += v.lcmg * w;
    }
    const double n = static_cast<double>(idx.size());
    acc.lt /= n;
    acc.lp /= n;
    acc.ls /= n;
    acc.lcmg /= n;
    return acc;
  };

  TrainReport report;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values = snapshot_values(trainable);
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    CmgLossValues train_acc;
    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t stop = std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch));
      CmgBatch sub = subset(train_idx, start, stop);
      zero_grads(all_ps);
      Tape t;
      const CmgLossNodes nodes = cmg_loss_graph(t, model, sub, cfg.lambda_p, cfg.lambda_s);
      t.backward(nodes.lcmg);
      opt.step(trainable);
      const double w = static_cast<double>(stop - start);
      train_acc.lt += t.value(nodes.lt).v[0] * w;
      train_acc.lp += t.value(nodes.lp).v[0] * w;
      train_acc.ls += t.value(nodes.ls).v[0] * w;
      train_acc.lcmg += t.value(nodes.lcmg).v[0] * w;
    }
    const double n_train = static_cast<double>(train_idx.size());
    train_acc.lt /= n_train;
    train_acc.lp /= n_train;
    train_acc.ls /= n_train;
    train_acc.lcmg /= n_train;
    const CmgLossValues dev = eval_split(dev_idx);

    TrainReport::Row row;
    row.epoch = epoch;
    row.lt = train_acc.lt;
    row.lp = train_acc.lp;
    row.ls = train_acc.ls;
    row.lcmg = train_acc.lcmg;
    row.split = "train";
    report.rows.push_back(row);
    row.lt = dev.lt;
    row.lp = dev.lp;
    row.ls = dev.ls;
    row.lcmg = dev.lcmg;
    row.split = "dev";
    report.rows.push_back(row);

    if (dev.lcmg < best) {
      best = dev.lcmg;
      best_values = snapshot_values(trainable);
      report.chosen_epoch = epoch;
      bad_epochs = 0;
      if (!checkpoint_path.empty()) save_cmg(model, checkpoint_path);
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  restore_values(trainable, best_values);
  if (!checkpoint_path.empty()) save_cmg(model, checkpoint_path);
  return report;
}

}  // namespace molgen
