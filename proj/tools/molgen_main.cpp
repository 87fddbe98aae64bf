// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "molgen/checkpoint.hpp"
#include "molgen/chem.hpp"
#include "molgen/decoding.hpp"
#include "molgen/errors.hpp"
#include "molgen/fingerprint.hpp"
#include "molgen/kernels.hpp"
#include "molgen/metrics.hpp"
#include "molgen/pairs.hpp"
#include "molgen/pipeline.hpp"
#include "molgen/properties.hpp"
#include "molgen/rng.hpp"
#include "molgen/training.hpp"

namespace {

using namespace molgen;

// Bad flag values detected after CLI parsing; mapped to exit code 2.
struct UsageFailure {
  std::string message;
};

void require_usage(bool ok, const std::string& message) {
  if (!ok) throw UsageFailure{message};
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_f(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_pct(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input files
// ---------------------------------------------------------------------------

struct NumberedLine {
  std::string text;
  int line = 0;
};

// Non-blank, non-'#' lines with their 1-based file line numbers.
std::vector<NumberedLine> read_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::vector<NumberedLine> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const size_t b = line.find_last_not_of(" \t");
    std::string text = line.substr(a, b - a + 1);
    if (text[0] == '#') continue;
    out.push_back({std::move(text), number});
  }
  return out;
}

std::vector<std::string> load_strings(const std::string& path) {
  std::vector<std::string> out;
  for (auto& l : read_list_file(path)) out.push_back(std::move(l.text));
  return out;
}

// Parses and scores every molecule; errors carry path:line and the text.
std::vector<MoleculeRecord> load_molecule_records(const std::string& path) {
  const std::vector<NumberedLine> lines = read_list_file(path);
  std::vector<MoleculeRecord> records;
  records.reserve(lines.size());
  for (const NumberedLine& l : lines) {
    try {
      const MolecularGraph g = parse_graph(l.text);
      records.push_back({l.text, surrogate_properties(g), morgan_fingerprint(g)});
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(l.line) + ": '" + l.text + "': " + e.what());
    }
  }
  if (records.empty()) throw EmptyCorpus("no molecules in '" + path + "'");
  return records;
}

// ---------------------------------------------------------------------------
// --config overlay: file values fill in flags the user did not pass
// ---------------------------------------------------------------------------

class ConfigOverlay {
 public:
  void bind(CLI::Option* opt, const std::string& key, int* v) {
    appliers_.push_back([opt, key, v](const KvConfig& cfg) {
      if (opt->count() == 0 && cfg.count(key)) *v = config_int(cfg, key);
    });
  }
  void bind(CLI::Option* opt, const std::string& key, double* v) {
    appliers_.push_back([opt, key, v](const KvConfig& cfg) {
      if (opt->count() == 0 && cfg.count(key)) *v = config_double(cfg, key);
    });
  }
  void bind(CLI::Option* opt, const std::string& key, std::string* v) {
    appliers_.push_back([opt, key, v](const KvConfig& cfg) {
      if (opt->count() == 0 && cfg.count(key)) *v = cfg.at(key);
    });
  }
  void bind(CLI::Option* opt, const std::string& key, uint64_t* v) {
    appliers_.push_back([opt, key, v](const KvConfig& cfg) {
      if (opt->count() > 0 || !cfg.count(key)) return;
      const std::string& text = cfg.at(key);
      char* end = nullptr;
      const unsigned long long parsed = std::strtoull(text.c_str(), &end, 10);
      if (end == text.c_str() || *end != '\0')
        throw ConfigMismatch("key '" + key + "' is not an unsigned integer: '" + text + "'");
      *v = parsed;
    });
  }

  void apply(const std::string& config_path) const {
    if (config_path.empty()) return;
    const KvConfig cfg = read_config_file(config_path);
    for (const auto& f : appliers_) f(cfg);
  }

 private:
  std::vector<std::function<void(const KvConfig&)>> appliers_;
};

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

struct CommonArgs {
  uint64_t seed = 1;
  int threads = 0;
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonArgs* c, ConfigOverlay* overlay) {
  CLI::Option* seed = cmd->add_option("--seed", c->seed, "Seed for all randomness");
  CLI::Option* threads =
      cmd->add_option("--threads", c->threads, "Worker threads (0 = library default)");
  cmd->add_option("--config", c->config_path, "key=value file supplying flag defaults");
  overlay->bind(seed, "seed", &c->seed);
  overlay->bind(threads, "threads", &c->threads);
}

void finish_common(const CommonArgs& c, const ConfigOverlay& overlay) {
  overlay.apply(c.config_path);
  require_usage(c.threads >= 0, "--threads must be >= 0");
  set_thread_count(c.threads);
}

struct ScheduleArgs {
  double lr = 1e-3;
  int batch = 16;
  int epochs = 50;
  int patience = 10;
  double dev_fraction = 0.2;
  int max_len = 64;
};

void add_schedule(CLI::App* cmd, ScheduleArgs* s, ConfigOverlay* overlay) {
  overlay->bind(cmd->add_option("--lr", s->lr, "Adam learning rate"), "lr", &s->lr);
  overlay->bind(cmd->add_option("--batch", s->batch, "Mini-batch size"), "batch", &s->batch);
  overlay->bind(cmd->add_option("--epochs", s->epochs, "Maximum epochs"), "epochs", &s->epochs);
  overlay->bind(cmd->add_option("--patience", s->patience, "Early-stopping patience"),
                "patience", &s->patience);
  overlay->bind(
      cmd->add_option("--dev-fraction", s->dev_fraction, "Dev share (0 reuses the train split)"),
      "dev-fraction", &s->dev_fraction);
  overlay->bind(cmd->add_option("--max-len", s->max_len, "Maximum framed sequence length"),
                "max-len", &s->max_len);
}

TrainConfig to_train_config(const ScheduleArgs& s, double lambda_p, double lambda_s,
                            uint64_t seed) {
  TrainConfig cfg;
  cfg.lambda_p = lambda_p;
  cfg.lambda_s = lambda_s;
  cfg.lr = s.lr;
  cfg.batch = s.batch;
  cfg.max_epochs = s.epochs;
  cfg.patience = s.patience;
  cfg.dev_fraction = s.dev_fraction;
  cfg.max_len = s.max_len;
  cfg.seed = seed;
  try {
    cfg.validate();
  } catch (const RangeError& e) {
    throw UsageFailure{e.what()};
  }
  return cfg;
}

long long count_params(const std::vector<const Parameter*>& params) {
  long long n = 0;
  for (const Parameter* p : params) n += static_cast<long long>(p->value.v.size());
  return n;
}

const TrainReport::Row* find_row(const TrainReport& report, int epoch, const std::string& split) {
  for (const auto& row : report.rows)
    if (row.epoch == epoch && row.split == split) return &row;
  return nullptr;
}

void print_chosen(const TrainReport& report) {
  std::cout << "chosen epoch: " << report.chosen_epoch;
  if (const TrainReport::Row* dev = find_row(report, report.chosen_epoch, "dev"))
    std::cout << " (dev lt " << fmt_short(dev->lt) << ", lp " << fmt_short(dev->lp) << ", ls "
              << fmt_short(dev->ls) << ", lcmg " << fmt_short(dev->lcmg) << ")";
  std::cout << "\n";
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

struct CurateArgs {
  CommonArgs common;
  std::string input;
  std::string out_dir;
  std::vector<std::string> holdouts;
  double delta = 0.4;
  double split_ratio = 0.8;
  int neg_cap = 10;
  double simnet_fraction = 0.5;
  double simnet_ratio = 0.5;
  int bins = 10;
};

int run_curate(const CurateArgs& a) {
  require_usage(a.delta > 0.0 && a.delta <= 1.0, "--delta must be in (0, 1]");
  require_usage(a.split_ratio > 0.0 && a.split_ratio < 1.0, "--split must be in (0, 1)");
  require_usage(a.simnet_fraction > 0.0 && a.simnet_fraction <= 1.0,
                "--simnet-fraction must be in (0, 1]");
  require_usage(a.simnet_ratio > 0.0 && a.simnet_ratio <= 1.0,
                "--simnet-ratio must be in (0, 1]");
  require_usage(a.neg_cap >= 1, "--neg-cap must be >= 1");
  require_usage(a.bins >= 1, "--bins must be >= 1");

  std::vector<MoleculeRecord> corpus = load_molecule_records(a.input);
  const size_t read_count = corpus.size();
  std::vector<std::vector<std::string>> holdouts;
  for (const std::string& p : a.holdouts) holdouts.push_back(load_strings(p));
  const int removed = exclude_molecules(corpus, holdouts);
  if (corpus.empty()) throw EmptyCorpus("every molecule was excluded by the holdout sets");

  MiningStats stats;
  const std::vector<PairRecord> mined = mine_pairs(corpus, a.delta, &stats);
  if (mined.empty())
    throw EmptyCorpus("no molecule pairs with similarity >= " + fmt_short(a.delta));

  KvConfig cfg;
  cfg["command"] = "curate";
  cfg["delta"] = fmt_g(a.delta);
  cfg["split"] = fmt_g(a.split_ratio);
  cfg["neg-cap"] = std::to_string(a.neg_cap);
  cfg["simnet-fraction"] = fmt_g(a.simnet_fraction);
  cfg["simnet-ratio"] = fmt_g(a.simnet_ratio);
  cfg["bins"] = std::to_string(a.bins);
  cfg["seed"] = std::to_string(a.common.seed);
  const PairFileMeta meta{config_hash(cfg), a.common.seed};

  std::filesystem::create_directories(a.out_dir);
  const std::string dir = a.out_dir + "/";
  write_config_file(dir + "curate.config", cfg);

  const std::vector<PairRow> pair_rows = to_pair_rows(corpus, mined);
  const auto [train_rows, dev_rows] =
      split(pair_rows, a.split_ratio, hash_combine64(a.common.seed, 1));
  write_pairs_tsv(dir + "pairs_train.tsv", train_rows, meta, false);
  write_pairs_tsv(dir + "pairs_dev.tsv", dev_rows, meta, false);

  const std::vector<PairRecord> negatives =
      sample_negative_pairs(corpus, a.delta, a.neg_cap, hash_combine64(a.common.seed, 2));
  std::vector<PairRecord> pool = mined;
  pool.insert(pool.end(), negatives.begin(), negatives.end());
  const std::vector<PairRecord> sampled = subsample_simnet(
      pool, a.simnet_fraction, a.simnet_ratio, a.bins, hash_combine64(a.common.seed, 3), a.delta);
  const std::vector<PairRow> labeled = to_labeled_rows(corpus, sampled, a.delta);
  int positives = 0;
  for (const PairRow& r : labeled) positives += r.label;
  const auto [sim_train, sim_dev] =
      split(labeled, a.split_ratio, hash_combine64(a.common.seed, 4));
  write_pairs_tsv(dir + "simnet_train.tsv", sim_train, meta, true);
  write_pairs_tsv(dir + "simnet_dev.tsv", sim_dev, meta, true);

  std::vector<PairRow> all_rows = pair_rows;
  all_rows.insert(all_rows.end(), labeled.begin(), labeled.end());
  const int leaks = audit_leakage(all_rows, holdouts);

  std::cout << "molecules: " << read_count << " read, " << removed << " excluded, "
            << corpus.size() << " kept\n";
  std::cout << "pairs: " << mined.size() << " mined at delta " << fmt_short(a.delta)
            << " (candidates " << stats.candidates << ", evaluations " << stats.evaluations
            << ")\n";
  std::cout << "translation split: " << train_rows.size() << " train, " << dev_rows.size()
            << " dev\n";
  std::cout << "simnet sample: " << labeled.size() << " rows, positive ratio "
            << fmt_f(labeled.empty() ? 0.0
                                     : static_cast<double>(positives) /
                                           static_cast<double>(labeled.size()))
            << " (" << sim_train.size() << " train, " << sim_dev.size() << " dev)\n";
  std::cout << "leakage: " << leaks << " rows\n";
  std::cout << "wrote: " << dir << "{pairs_train,pairs_dev,simnet_train,simnet_dev}.tsv\n";
  if (leaks != 0) {
    std::cerr << "error: " << leaks << " rows leak into the holdout sets\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// pretrain-propnet / pretrain-simnet
// ---------------------------------------------------------------------------

struct PretrainArgs {
  CommonArgs common;
  ScheduleArgs schedule;
  std::string input;
  std::string out;
  std::string report_path;
  int d = 64;
};

int run_pretrain_propnet(const PretrainArgs& a) {
  require_usage(a.d >= 1, "--d must be >= 1");
  const TrainConfig cfg =
      to_train_config(a.schedule, 0.0, 0.0, hash_combine64(a.common.seed, 1));

  const std::vector<MoleculeRecord> records = load_molecule_records(a.input);
  std::vector<PropertyExample> corpus;
  corpus.reserve(records.size());
  for (const MoleculeRecord& r : records) corpus.push_back({r.smiles, r.properties});

  Rng rng(a.common.seed);
  PropNet net(a.d, vocab::size(), rng);
  std::cout << "propnet: d=" << a.d << " V=" << vocab::size() << ", "
            << count_params(std::as_const(net).params()) << " parameters, " << corpus.size()
            << " molecules\n";

  const PropnetPretrainResult result = pretrain_propnet(net, corpus, cfg);
  save_propnet(net, result.scaler, a.out);
  if (!a.report_path.empty()) write_train_report(a.report_path, result.report);

  print_chosen(result.report);
  std::cout << "dev mse (normalized): " << fmt_short(result.dev_mse) << "\n";
  std::cout << "wrote: " << a.out << "\n";
  return 0;
}

int run_pretrain_simnet(const PretrainArgs& a) {
  require_usage(a.d >= 1, "--d must be >= 1");
  const TrainConfig cfg =
      to_train_config(a.schedule, 0.0, 0.0, hash_combine64(a.common.seed, 1));

  const std::vector<PairRow> rows = read_pairs_tsv(a.input);
  if (rows.empty()) throw EmptyCorpus("no pair rows in '" + a.input + "'");
  if (rows.front().label < 0)
    throw ParseError("'" + a.input + "': label column required for similarity pre-training");
  std::vector<SimilarityExample> corpus;
  corpus.reserve(rows.size());
  for (const PairRow& r : rows) corpus.push_back({r.x_smiles, r.y_smiles, r.label});

  Rng rng(a.common.seed);
  SimNet net(a.d, vocab::size(), rng);
  std::cout << "simnet: d=" << a.d << " V=" << vocab::size() << ", "
            << count_params(std::as_const(net).params()) << " parameters, " << corpus.size()
            << " pairs\n";

  const SimnetPretrainResult result = pretrain_simnet(net, corpus, cfg);
  save_simnet(net, a.out);
  if (!a.report_path.empty()) write_train_report(a.report_path, result.report);

  print_chosen(result.report);
  std::cout << "dev accuracy: " << fmt_pct(100.0 * result.dev_accuracy) << "\n";
  std::cout << "wrote: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  CommonArgs common;
  ScheduleArgs schedule;
  std::string pairs;
  std::string propnet;
  std::string simnet;
  std::string out;
  std::string report_path;
  double lambda_p = 0.5;
  double lambda_s = 0.5;
  int d = 64;
  int heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ff = 128;
};

int run_train(const TrainArgs& a) {
  const TrainConfig cfg =
      to_train_config(a.schedule, a.lambda_p, a.lambda_s, hash_combine64(a.common.seed, 1));

  const std::vector<PairRow> rows = read_pairs_tsv(a.pairs);
  if (rows.empty()) throw EmptyCorpus("no pair rows in '" + a.pairs + "'");

  PropnetArtifacts propnet = load_propnet(a.propnet);
  std::unique_ptr<SimNet> simnet = load_simnet(a.simnet);

  TranslatorConfig tc;
  tc.d = a.d;
  tc.heads = a.heads;
  tc.enc_layers = a.enc_layers;
  tc.dec_layers = a.dec_layers;
  tc.ff = a.ff;
  tc.M = a.schedule.max_len;
  Rng rng(a.common.seed);
  std::unique_ptr<Translator> translator;
  try {
    translator = std::make_unique<Translator>(tc, rng);
  } catch (const ConfigMismatch& e) {
    throw UsageFailure{e.what()};
  }

  CmgModel model =
      assemble_cmg(std::move(translator), std::move(propnet.net), std::move(simnet),
                   propnet.scaler);
  long long trainable = 0;
  for (const Parameter* p : model.trainable_params())
    trainable += static_cast<long long>(p->value.v.size());
  std::cout << "cmg: " << count_params(std::as_const(model).all_params()) << " parameters ("
            << trainable << " trainable), " << rows.size() << " pairs\n";

  const TrainReport report = train_cmg(model, rows, cfg, a.out);
  save_cmg(model, a.out);
  if (!a.report_path.empty()) write_train_report(a.report_path, report);

  print_chosen(report);
  std::cout << "wrote: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  CommonArgs common;
  std::string model;
  std::string input;
  std::string out;
  std::string target_text;
  std::string sigma_text = "0,0,0";
  int n = 20;
  int beam = 5;
};

std::array<double, kNumProperties> parse_sigma(const std::string& text) {
  std::array<double, kNumProperties> sigma{};
  size_t pos = 0;
  int count = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string entry = text.substr(pos, comma - pos);
    require_usage(count < kNumProperties,
                  "--sigma needs exactly " + std::to_string(kNumProperties) + " values");
    char* end = nullptr;
    const double v = std::strtod(entry.c_str(), &end);
    require_usage(end != entry.c_str() && *end == '\0' && v >= 0.0,
                  "--sigma entries must be non-negative numbers: '" + entry + "'");
    sigma[static_cast<size_t>(count++)] = v;
    pos = comma + 1;
  }
  require_usage(count == kNumProperties,
                "--sigma needs exactly " + std::to_string(kNumProperties) + " values");
  return sigma;
}

int run_generate(const GenerateArgs& a) {
  require_usage(a.n >= 1, "--n must be >= 1");
  require_usage(a.beam >= 1, "--beam must be >= 1");
  TargetVector target;
  try {
    target = parse_target(a.target_text);
  } catch (const ParseError& e) {
    throw UsageFailure{std::string("--target: ") + e.what()};
  }
  DiversifyConfig dcfg;
  dcfg.sigma = parse_sigma(a.sigma_text);
  dcfg.n_samples = a.n;
  try {
    dcfg.validate();
  } catch (const RangeError& e) {
    throw UsageFailure{e.what()};
  }

  CmgModel model = load_cmg(a.model);
  const std::vector<NumberedLine> lines = read_list_file(a.input);
  if (lines.empty()) throw EmptyCorpus("no molecules in '" + a.input + "'");

  std::vector<GenerationRecord> all;
  all.reserve(lines.size() * static_cast<size_t>(a.n));
  for (size_t i = 0; i < lines.size(); ++i) {
    const NumberedLine& l = lines[i];
    try {
      const PropertyVector px = surrogate_properties(parse_graph(l.text));
      const PropertyVector py = resolve_target(target, px);
      std::vector<GenerationRecord> records =
          generate(model, l.text, py, dcfg, a.beam, hash_combine64(a.common.seed, i));
      all.insert(all.end(), std::make_move_iterator(records.begin()),
                 std::make_move_iterator(records.end()));
    } catch (const Error& e) {
      throw Error(a.input + ":" + std::to_string(l.line) + ": '" + l.text + "': " + e.what());
    }
  }
  write_generation_tsv(a.out, all);

  int complete = 0;
  int valid = 0;
  for (const GenerationRecord& r : all) {
    complete += r.complete;
    valid += r.valid;
  }
  std::cout << "generated: " << lines.size() << " inputs x " << a.n << " jitters -> "
            << all.size() << " records (" << complete << " complete, " << valid << " valid)\n";
  std::cout << "wrote: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / report
// ---------------------------------------------------------------------------

constexpr const char* kDiversityNote =
    "diversity is a stand-in: mean pairwise Tanimoto distance among distinct "
    "valid outputs meeting the similarity bar";

struct EvalOptions {
  std::string mode = "all";  // all | soo | moo
  int property_index = 0;
  double delta = 0.4;
  MooCriteria criteria{};

  bool wants_soo() const { return mode != "moo"; }
  bool wants_moo() const { return mode != "soo"; }
};

struct EvalSummary {
  size_t inputs = 0;
  size_t records = 0;
  size_t complete = 0;
  size_t valid = 0;
  double improvement_mean = 0.0;
  double improvement_std = 0.0;
  double diversity = 0.0;
  double moo_rate = 0.0;
};

EvalSummary summarize(const std::vector<GenerationRecord>& records,
                      const std::vector<GenerationResult>& results, const EvalOptions& opt) {
  EvalSummary s;
  s.inputs = results.size();
  s.records = records.size();
  for (const GenerationRecord& r : records) s.complete += r.complete;
  for (const GenerationResult& r : results)
    for (const ScoredOutput& o : r.outputs) s.valid += o.valid;
  if (opt.wants_soo()) {
    const auto [mean, stddev] = metric_improvement(results, opt.property_index, opt.delta);
    s.improvement_mean = mean;
    s.improvement_std = stddev;
    s.diversity = metric_diversity(results, opt.delta);
  }
  if (opt.wants_moo()) s.moo_rate = metric_moo_success_rate(results, opt.criteria);
  return s;
}

void write_metrics_tsv(const std::string& path, const EvalSummary& s, const EvalOptions& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "# generation metrics\n";
  out << "# " << kDiversityNote << "\n";
  out << "metric\tvalue\n";
  out << "inputs\t" << s.inputs << "\n";
  out << "records\t" << s.records << "\n";
  out << "complete_records\t" << s.complete << "\n";
  out << "valid_outputs\t" << s.valid << "\n";
  out << "delta\t" << fmt_g(opt.delta) << "\n";
  if (opt.wants_soo()) {
    out << "property\t" << property_name(opt.property_index) << "\n";
    out << "improvement_mean\t" << fmt_g(s.improvement_mean) << "\n";
    out << "improvement_std\t" << fmt_g(s.improvement_std) << "\n";
    out << "diversity\t" << fmt_g(s.diversity) << "\n";
  }
  if (opt.wants_moo()) {
    out << "min_plogp_gain\t" << fmt_g(opt.criteria.min_plogp_gain) << "\n";
    out << "min_qed\t" << fmt_g(opt.criteria.min_qed) << "\n";
    out << "min_drd2\t" << fmt_g(opt.criteria.min_drd2) << "\n";
    out << "moo_success_rate_pct\t" << fmt_g(s.moo_rate) << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void print_summary(std::ostream& out, const EvalSummary& s, const EvalOptions& opt) {
  out << "inputs: " << s.inputs << "\n";
  out << "records: " << s.records << " (" << s.complete << " complete, " << s.valid
      << " valid)\n";
  if (opt.wants_soo()) {
    out << "improvement " << property_name(opt.property_index) << ": mean "
        << fmt_f(s.improvement_mean) << ", std " << fmt_f(s.improvement_std) << " (delta "
        << fmt_short(opt.delta) << ")\n";
    out << "diversity: " << fmt_f(s.diversity) << " [" << kDiversityNote << "]\n";
  }
  if (opt.wants_moo()) {
    out << "moo success rate: " << fmt_pct(s.moo_rate) << " (delta " << fmt_short(opt.delta)
        << ", plogp gain >= " << fmt_short(opt.criteria.min_plogp_gain) << ", qed >= "
        << fmt_short(opt.criteria.min_qed) << ", drd2 > " << fmt_short(opt.criteria.min_drd2)
        << ")\n";
  }
}

struct InputRow {
  std::string smiles;
  size_t outputs = 0;
  size_t valid = 0;
  bool any_qualifying = false;
  double best_gain = 0.0;
  double best_qed = 0.0;
  double best_drd2 = 0.0;
  bool moo = false;
};

std::vector<InputRow> per_input_rows(const std::vector<GenerationResult>& results,
                                     const EvalOptions& opt) {
  std::vector<InputRow> rows;
  rows.reserve(results.size());
  for (const GenerationResult& res : results) {
    InputRow row;
    row.smiles = res.input_smiles;
    row.outputs = res.outputs.size();
    MoleculeRecord x{res.input_smiles, res.input_properties, res.input_fingerprint};
    for (const ScoredOutput& o : res.outputs) {
      if (!o.valid) continue;
      ++row.valid;
      if (o.tanimoto >= opt.delta) {
        const double gain = o.properties.plogp - res.input_properties.plogp;
        if (!row.any_qualifying || gain > row.best_gain) row.best_gain = gain;
        if (!row.any_qualifying || o.properties.qed > row.best_qed)
          row.best_qed = o.properties.qed;
        if (!row.any_qualifying || o.properties.drd2 > row.best_drd2)
          row.best_drd2 = o.properties.drd2;
        row.any_qualifying = true;
      }
      const MoleculeRecord y{o.smiles, o.properties, o.fingerprint};
      if (!row.moo && moo_success(x, y, opt.criteria)) row.moo = true;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text_report(const std::string& path, const EvalSummary& s, const EvalOptions& opt,
                       const std::vector<InputRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "generation report\n";
  out << "=================\n\n";
  print_summary(out, s, opt);
  out << "\nper-input\n";
  out << "input\toutputs\tvalid\tbest_plogp_gain\tbest_qed\tbest_drd2\tmoo\n";
  for (const InputRow& r : rows) {
    out << r.smiles << "\t" << r.outputs << "\t" << r.valid << "\t";
    if (r.any_qualifying)
      out << fmt_f(r.best_gain) << "\t" << fmt_f(r.best_qed) << "\t" << fmt_f(r.best_drd2);
    else
      out << "-\t-\t-";
    out << "\t" << (r.moo ? "yes" : "no") << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_html_report(const std::string& path, const EvalSummary& s, const EvalOptions& opt,
                       const std::vector<InputRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
      << "<title>generation report</title>\n"
      << "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}"
      << "td,th{border:1px solid #999;padding:4px 8px;text-align:left}"
      << ".note{color:#555;font-style:italic}</style>\n</head><body>\n"
      << "<h1>generation report</h1>\n";
  out << "<h2>metrics</h2>\n<table>\n<tr><th>metric</th><th>value</th></tr>\n";
  out << "<tr><td>inputs</td><td>" << s.inputs << "</td></tr>\n";
  out << "<tr><td>records</td><td>" << s.records << "</td></tr>\n";
  out << "<tr><td>complete records</td><td>" << s.complete << "</td></tr>\n";
  out << "<tr><td>valid outputs</td><td>" << s.valid << "</td></tr>\n";
  out << "<tr><td>similarity bar (delta)</td><td>" << fmt_short(opt.delta) << "</td></tr>\n";
  out << "<tr><td>improvement " << property_name(opt.property_index) << " (mean)</td><td>"
      << fmt_f(s.improvement_mean) << "</td></tr>\n";
  out << "<tr><td>improvement " << property_name(opt.property_index) << " (std)</td><td>"
      << fmt_f(s.improvement_std) << "</td></tr>\n";
  out << "<tr><td>diversity</td><td>" << fmt_f(s.diversity) << "</td></tr>\n";
  out << "<tr><td>moo success rate</td><td>" << fmt_pct(s.moo_rate) << "</td></tr>\n";
  out << "</table>\n";
  out << "<p class=\"note\">" << kDiversityNote << "</p>\n";
  out << "<p>moo criteria: similarity &gt;= " << fmt_short(opt.criteria.delta)
      << ", plogp gain &gt;= " << fmt_short(opt.criteria.min_plogp_gain) << ", qed &gt;= "
      << fmt_short(opt.criteria.min_qed) << ", drd2 &gt; " << fmt_short(opt.criteria.min_drd2)
      << "</p>\n";
  out << "<h2>per-input results</h2>\n<table>\n"
      << "<tr><th>input</th><th>outputs</th><th>valid</th><th>best plogp gain</th>"
      << "<th>best qed</th><th>best drd2</th><th>moo</th></tr>\n";
  for (const InputRow& r : rows) {
    out << "<tr><td>" << html_escape(r.smiles) << "</td><td>" << r.outputs << "</td><td>"
        << r.valid << "</td>";
    if (r.any_qualifying)
      out << "<td>" << fmt_f(r.best_gain) << "</td><td>" << fmt_f(r.best_qed) << "</td><td>"
          << fmt_f(r.best_drd2) << "</td>";
    else
      out << "<td>-</td><td>-</td><td>-</td>";
    out << "<td>" << (r.moo ? "yes" : "no") << "</td></tr>\n";
  }
  out << "</table>\n</body></html>\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

struct EvaluateArgs {
  CommonArgs common;
  std::string input;
  std::string out;
  std::string mode = "all";
  std::string property = "plogp";
  double delta = 0.4;
  double min_plogp_gain = 1.0;
  double min_qed = 0.9;
  double min_drd2 = 0.5;
};

EvalOptions to_eval_options(const EvaluateArgs& a) {
  EvalOptions opt;
  require_usage(a.mode == "all" || a.mode == "soo" || a.mode == "moo",
                "--mode must be all, soo or moo");
  opt.mode = a.mode;
  opt.property_index = -1;
  for (int i = 0; i < kNumProperties; ++i)
    if (a.property == property_name(i)) opt.property_index = i;
  require_usage(opt.property_index >= 0, "--property must be plogp, qed or drd2");
  require_usage(a.delta > 0.0 && a.delta <= 1.0, "--delta must be in (0, 1]");
  opt.delta = a.delta;
  opt.criteria.delta = a.delta;
  opt.criteria.min_plogp_gain = a.min_plogp_gain;
  opt.criteria.min_qed = a.min_qed;
  opt.criteria.min_drd2 = a.min_drd2;
  return opt;
}

int run_evaluate(const EvaluateArgs& a) {
  const EvalOptions opt = to_eval_options(a);
  const std::vector<GenerationRecord> records = read_generation_tsv(a.input);
  const std::vector<GenerationResult> results = score_generation(records);
  const EvalSummary s = summarize(records, results, opt);
  print_summary(std::cout, s, opt);
  if (!a.out.empty()) {
    write_metrics_tsv(a.out, s, opt);
    std::cout << "wrote: " << a.out << "\n";
  }
  return 0;
}

struct ReportArgs {
  EvaluateArgs eval;  // report always renders every metric; --mode is absent
  std::string out_dir;
};

int run_report(const ReportArgs& a) {
  EvalOptions opt = to_eval_options(a.eval);
  opt.mode = "all";
  const std::vector<GenerationRecord> records = read_generation_tsv(a.eval.input);
  const std::vector<GenerationResult> results = score_generation(records);
  const EvalSummary s = summarize(records, results, opt);
  const std::vector<InputRow> rows = per_input_rows(results, opt);

  std::filesystem::create_directories(a.out_dir);
  const std::string dir = a.out_dir + "/";
  write_metrics_tsv(dir + "metrics.tsv", s, opt);
  write_text_report(dir + "report.txt", s, opt, rows);
  write_html_report(dir + "report.html", s, opt, rows);

  print_summary(std::cout, s, opt);
  std::cout << "wrote: " << dir << "{metrics.tsv,report.txt,report.html}\n";
  return 0;
}

void add_eval_flags(CLI::App* cmd, EvaluateArgs* a, ConfigOverlay* overlay, bool with_mode) {
  overlay->bind(cmd->add_option("--input", a->input, "Generation TSV")->required(), "input",
                &a->input);
  if (with_mode)
    overlay->bind(cmd->add_option("--mode", a->mode, "all, soo or moo"), "mode", &a->mode);
  overlay->bind(cmd->add_option("--property", a->property,
                                "Property for the improvement metric (plogp, qed, drd2)"),
                "property", &a->property);
  overlay->bind(cmd->add_option("--delta", a->delta, "Similarity bar"), "delta", &a->delta);
  overlay->bind(cmd->add_option("--min-plogp-gain", a->min_plogp_gain,
                                "Multi-objective plogp gain threshold (inclusive)"),
                "min-plogp-gain", &a->min_plogp_gain);
  overlay->bind(cmd->add_option("--min-qed", a->min_qed,
                                "Multi-objective qed threshold (inclusive)"),
                "min-qed", &a->min_qed);
  overlay->bind(cmd->add_option("--min-drd2", a->min_drd2,
                                "Multi-objective drd2 threshold (strict)"),
                "min-drd2", &a->min_drd2);
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"Property-conditioned molecule generation toolkit"};
  app.require_subcommand(1);

  CurateArgs curate_args;
  ConfigOverlay curate_overlay;
  CLI::App* curate = app.add_subcommand(
      "curate", "Mine similar-pair corpora and similarity-classifier samples");
  curate_overlay.bind(
      curate->add_option("--input", curate_args.input, "Molecule list, one per line")->required(),
      "input", &curate_args.input);
  curate_overlay.bind(
      curate->add_option("--out-dir", curate_args.out_dir, "Output directory")->required(),
      "out-dir", &curate_args.out_dir);
  curate->add_option("--holdout", curate_args.holdouts,
                     "Holdout molecule list (repeatable); exact matches are excluded");
  curate_overlay.bind(curate->add_option("--delta", curate_args.delta, "Similarity bar"),
                      "delta", &curate_args.delta);
  curate_overlay.bind(curate->add_option("--split", curate_args.split_ratio, "Train share"),
                      "split", &curate_args.split_ratio);
  curate_overlay.bind(
      curate->add_option("--neg-cap", curate_args.neg_cap, "Negative draws per molecule"),
      "neg-cap", &curate_args.neg_cap);
  curate_overlay.bind(curate->add_option("--simnet-fraction", curate_args.simnet_fraction,
                                         "Share of the pair pool kept for the classifier"),
                      "simnet-fraction", &curate_args.simnet_fraction);
  curate_overlay.bind(curate->add_option("--simnet-ratio", curate_args.simnet_ratio,
                                         "Positive share of the classifier sample"),
                      "simnet-ratio", &curate_args.simnet_ratio);
  curate_overlay.bind(
      curate->add_option("--bins", curate_args.bins, "Similarity histogram bins"), "bins",
      &curate_args.bins);
  add_common(curate, &curate_args.common, &curate_overlay);

  PretrainArgs propnet_args;
  ConfigOverlay propnet_overlay;
  CLI::App* pretrain_propnet = app.add_subcommand(
      "pretrain-propnet", "Train the property predictor on a molecule list");
  propnet_overlay.bind(
      pretrain_propnet->add_option("--input", propnet_args.input, "Molecule list")->required(),
      "input", &propnet_args.input);
  propnet_overlay.bind(
      pretrain_propnet->add_option("--out", propnet_args.out, "Checkpoint path")->required(),
      "out", &propnet_args.out);
  propnet_overlay.bind(pretrain_propnet->add_option("--report", propnet_args.report_path,
                                                    "Loss-curve TSV path"),
                       "report", &propnet_args.report_path);
  propnet_overlay.bind(pretrain_propnet->add_option("--d", propnet_args.d, "Hidden width"),
                       "d", &propnet_args.d);
  add_schedule(pretrain_propnet, &propnet_args.schedule, &propnet_overlay);
  add_common(pretrain_propnet, &propnet_args.common, &propnet_overlay);

  PretrainArgs simnet_args;
  ConfigOverlay simnet_overlay;
  CLI::App* pretrain_simnet = app.add_subcommand(
      "pretrain-simnet", "Train the similarity classifier on a labeled pair TSV");
  simnet_overlay.bind(
      pretrain_simnet->add_option("--input", simnet_args.input, "Labeled pair TSV")->required(),
      "input", &simnet_args.input);
  simnet_overlay.bind(
      pretrain_simnet->add_option("--out", simnet_args.out, "Checkpoint path")->required(),
      "out", &simnet_args.out);
  simnet_overlay.bind(
      pretrain_simnet->add_option("--report", simnet_args.report_path, "Loss-curve TSV path"),
      "report", &simnet_args.report_path);
  simnet_overlay.bind(pretrain_simnet->add_option("--d", simnet_args.d, "Hidden width"), "d",
                      &simnet_args.d);
  add_schedule(pretrain_simnet, &simnet_args.schedule, &simnet_overlay);
  add_common(pretrain_simnet, &simnet_args.common, &simnet_overlay);

  TrainArgs train_args;
  ConfigOverlay train_overlay;
  CLI::App* train = app.add_subcommand(
      "train", "Train the translator against the frozen constraint networks");
  train_overlay.bind(
      train->add_option("--pairs", train_args.pairs, "Translation pair TSV")->required(),
      "pairs", &train_args.pairs);
  train_overlay.bind(
      train->add_option("--propnet", train_args.propnet, "Property-net checkpoint")->required(),
      "propnet", &train_args.propnet);
  train_overlay.bind(
      train->add_option("--simnet", train_args.simnet, "Similarity-net checkpoint")->required(),
      "simnet", &train_args.simnet);
  train_overlay.bind(train->add_option("--out", train_args.out, "Checkpoint path")->required(),
                     "out", &train_args.out);
  train_overlay.bind(train->add_option("--report", train_args.report_path, "Loss-curve TSV path"),
                     "report", &train_args.report_path);
  train_overlay.bind(
      train->add_option("--lambda-p", train_args.lambda_p, "Property-loss weight"), "lambda-p",
      &train_args.lambda_p);
  train_overlay.bind(
      train->add_option("--lambda-s", train_args.lambda_s, "Similarity-loss weight"), "lambda-s",
      &train_args.lambda_s);
  train_overlay.bind(train->add_option("--d", train_args.d, "Model width"), "d", &train_args.d);
  train_overlay.bind(train->add_option("--heads", train_args.heads, "Attention heads"), "heads",
                     &train_args.heads);
  train_overlay.bind(train->add_option("--enc-layers", train_args.enc_layers, "Encoder layers"),
                     "enc-layers", &train_args.enc_layers);
  train_overlay.bind(train->add_option("--dec-layers", train_args.dec_layers, "Decoder layers"),
                     "dec-layers", &train_args.dec_layers);
  train_overlay.bind(train->add_option("--ff", train_args.ff, "Feed-forward width"), "ff",
                     &train_args.ff);
  add_schedule(train, &train_args.schedule, &train_overlay);
  add_common(train, &train_args.common, &train_overlay);

  GenerateArgs generate_args;
  ConfigOverlay generate_overlay;
  CLI::App* generate_cmd = app.add_subcommand(
      "generate", "Generate molecules toward a property target");
  generate_overlay.bind(
      generate_cmd->add_option("--model", generate_args.model, "Trained checkpoint")->required(),
      "model", &generate_args.model);
  generate_overlay.bind(
      generate_cmd->add_option("--input", generate_args.input, "Molecule list")->required(),
      "input", &generate_args.input);
  generate_overlay.bind(
      generate_cmd->add_option("--out", generate_args.out, "Generation TSV path")->required(),
      "out", &generate_args.out);
  generate_overlay.bind(
      generate_cmd->add_option("--target", generate_args.target_text,
                               "Per-property goals, e.g. \"plogp+1,qed=keep,drd2=keep\""),
      "target", &generate_args.target_text);
  generate_overlay.bind(generate_cmd->add_option("--n", generate_args.n, "Jitters per input"),
                        "n", &generate_args.n);
  generate_overlay.bind(
      generate_cmd->add_option("--sigma", generate_args.sigma_text,
                               "Jitter stddev per property, e.g. \"0.2,0.05,0.05\""),
      "sigma", &generate_args.sigma_text);
  generate_overlay.bind(generate_cmd->add_option("--beam", generate_args.beam, "Beam width"),
                        "beam", &generate_args.beam);
  add_common(generate_cmd, &generate_args.common, &generate_overlay);

  EvaluateArgs evaluate_args;
  ConfigOverlay evaluate_overlay;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Score a generation TSV and print metrics");
  add_eval_flags(evaluate_cmd, &evaluate_args, &evaluate_overlay, true);
  evaluate_overlay.bind(
      evaluate_cmd->add_option("--out", evaluate_args.out, "Optional metrics TSV path"), "out",
      &evaluate_args.out);
  add_common(evaluate_cmd, &evaluate_args.common, &evaluate_overlay);

  ReportArgs report_args;
  ConfigOverlay report_overlay;
  CLI::App* report_cmd = app.add_subcommand(
      "report", "Render metrics TSV plus text and HTML summaries");
  add_eval_flags(report_cmd, &report_args.eval, &report_overlay, false);
  report_overlay.bind(
      report_cmd->add_option("--out-dir", report_args.out_dir, "Output directory")->required(),
      "out-dir", &report_args.out_dir);
  add_common(report_cmd, &report_args.eval.common, &report_overlay);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (curate->parsed()) {
      finish_common(curate_args.common, curate_overlay);
      return run_curate(curate_args);
    }
    if (pretrain_propnet->parsed()) {
      finish_common(propnet_args.common, propnet_overlay);
      return run_pretrain_propnet(propnet_args);
    }
    if (pretrain_simnet->parsed()) {
      finish_common(simnet_args.common, simnet_overlay);
      return run_pretrain_simnet(simnet_args);
    }
    if (train->parsed()) {
      finish_common(train_args.common, train_overlay);
      return run_train(train_args);
    }
    if (generate_cmd->parsed()) {
      finish_common(generate_args.common, generate_overlay);
      return run_generate(generate_args);
    }
    if (evaluate_cmd->parsed()) {
      finish_common(evaluate_args.common, evaluate_overlay);
      return run_evaluate(evaluate_args);
    }
    if (report_cmd->parsed()) {
      finish_common(report_args.eval.common, report_overlay);
      return run_report(report_args);
    }
  } catch (const UsageFailure& u) {
    std::cerr << "usage error: " << u.message << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
