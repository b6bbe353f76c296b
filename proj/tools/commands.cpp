#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <memory>

#include "sdistill/corpus/pcfg.hpp"
#include "sdistill/corpus/supertags.hpp"
#include "sdistill/corpus/tokenizer.hpp"
#include "sdistill/corpus/tree.hpp"
#include "sdistill/corpus/vocab.hpp"
#include "sdistill/distill/corrupt.hpp"
#include "sdistill/distill/kd_io.hpp"
#include "sdistill/distill/targets.hpp"
#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/posterior/dump.hpp"
#include "sdistill/posterior/posterior.hpp"
#include "sdistill/probe/probe.hpp"
#include "sdistill/student/student.hpp"
#include "sdistill/teachers/ngram.hpp"
#include "sdistill/teachers/recurrent.hpp"
#include "sdistill/teachers/registry.hpp"
#include "sdistill/teachers/syntactic.hpp"
#include "sdistill/teachers/unigram.hpp"
#include "sdistill/transitions/oracle.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::cli {
namespace {

using corpus::PhraseTree;
using corpus::TokenId;
using corpus::Vocabulary;
using transitions::Direction;

void log(const RunConfig& cfg, const std::string& msg) {
  if (std::getenv("SDISTILL_QUIET")) return;
  std::fprintf(stderr, "[%s] %s\n", cfg.command().c_str(), msg.c_str());
}

void write_echo(const RunConfig& cfg, const std::string& output) { write_file(output + ".config", cfg.echo()); }

void write_output(const RunConfig& cfg, const std::string& contents) {
  const auto out = cfg.required("output");
  write_file(out, contents);
  write_echo(cfg, out);
}

Vocabulary load_vocab(const RunConfig& cfg) { return Vocabulary::load(cfg.required("vocab")); }

int jobs(const RunConfig& cfg) {
  const auto j = cfg.integer("jobs");
  if (j < 1) throw UsageError("jobs must be >= 1");
  return static_cast<int>(j);
}

struct Corpus {
  std::vector<PhraseTree> trees;
  std::vector<std::vector<TokenId>> ids;
};

// WORD-augmented tree file -> trees plus their subword id sequences.
Corpus load_corpus(const std::string& path, const Vocabulary& vocab, std::size_t limit = 0) {
  Corpus c;
  c.trees = corpus::read_tree_file(path);
  if (limit > 0 && c.trees.size() > limit) c.trees.resize(limit);
  for (std::size_t s = 0; s < c.trees.size(); ++s) {
    if (!corpus::is_valid(c.trees[s], true)) {
      throw DataError(path + ": tree " + std::to_string(s + 1) + " is not WORD-augmented");
    }
    const auto pieces = corpus::leaves(c.trees[s]);
    c.ids.push_back(vocab.encode(pieces));
  }
  return c;
}

const std::vector<KeySpec> kNetworkKeys = {
    {"learning-rate", "0.25", "initial SGD learning rate"},
    {"decay", "0.92", "per-epoch learning-rate decay"},
    {"decay-start", "10", "first decayed epoch"},
    {"clip-norm", "5", "global gradient-norm clip"},
    {"epochs", "20", "training epochs"},
    {"hidden", "64", "LSTM width"},
    {"embedding", "32", "embedding width"},
    {"layers", "1", "LSTM layers"},
    {"dropout", "0", "dropout rate"},
    {"init-scale", "0.1", "uniform init half-width"}};

std::vector<KeySpec> with_network_keys(std::vector<KeySpec> keys,
                                       const std::map<std::string, std::string>& overrides = {}) {
  for (auto k : kNetworkKeys) {
    if (const auto it = overrides.find(k.name); it != overrides.end()) k.value = it->second;
    keys.push_back(k);
  }
  return keys;
}

neural::TrainConfig train_config(const RunConfig& cfg, std::string_view stream) {
  std::map<std::string, std::string> kv;
  for (const auto& k : kNetworkKeys) {
    std::string name = k.name;
    for (auto& ch : name) {
      if (ch == '-') ch = '_';
    }
    kv[name] = cfg.required(k.name);
  }
  kv["seed"] = std::to_string(derive_seed(cfg.u64("seed"), stream));
  auto tc = neural::TrainConfig::from_map(kv);
  tc.validate();
  return tc;
}

void log_history(const RunConfig& cfg, const std::vector<double>& hist, const char* what) {
  for (std::size_t e = 0; e < hist.size(); ++e) {
    log(cfg, "epoch " + std::to_string(e + 1) + " " + what + " " + format_double(hist[e]));
  }
}

// ---- trees / sample / oracle ----

void run_trees(const RunConfig& cfg) {
  const auto input = cfg.required("input");
  const auto trees = corpus::read_tree_file(input);
  const bool sub = cfg.boolean("subwordify");
  const bool labels = cfg.has("probe-labels");
  if (labels && !sub) throw UsageError("--probe-labels reads plain trees and needs --subwordify");
  std::unique_ptr<Vocabulary> vocab;
  if (sub) vocab = std::make_unique<Vocabulary>(load_vocab(cfg));
  const auto chain = cfg.integer("chain");
  if (chain < 1) throw UsageError("chain must be >= 1");
  std::vector<PhraseTree> out;
  probe::ProbeDataset probe;
  for (std::size_t s = 0; s < trees.size(); ++s) {
    if (!corpus::is_valid(trees[s], !sub)) {
      throw DataError(input + ": tree " + std::to_string(s + 1) +
                      (sub ? " is not a plain phrase tree" : " is not WORD-augmented"));
    }
    if (sub) {
      corpus::Tokenizer tok(*vocab);
      out.push_back(corpus::subwordify(trees[s], tok));
      if (labels) probe.sentences.push_back(corpus::supertag(trees[s], tok, static_cast<int>(chain)));
    } else {
      out.push_back(trees[s]);
    }
  }
  const auto output = cfg.required("output");
  corpus::write_tree_file(output, out);
  write_echo(cfg, output);
  if (labels) probe::write_probe_dataset(cfg.str("probe-labels"), probe);
  log(cfg, std::to_string(out.size()) + " trees");
}

void run_sample(const RunConfig& cfg) {
  const auto g = corpus::Pcfg::load(cfg.required("grammar"), static_cast<int>(cfg.integer("depth-cap")));
  const auto n = cfg.u64("n");
  const auto seed = cfg.u64("seed");
  std::vector<PhraseTree> trees(n);
  parallel_for(n, jobs(cfg), [&](std::size_t s) { trees[s] = corpus::sample_pcfg(g, derive_seed(seed, "sample", s)); });
  const auto output = cfg.required("output");
  corpus::write_tree_file(output, trees);
  write_echo(cfg, output);
  log(cfg, std::to_string(n) + " trees sampled");
}

void run_oracle(const RunConfig& cfg) {
  const auto input = cfg.required("input");
  const auto trees = corpus::read_tree_file(input);
  const auto dir = transitions::parse_direction(cfg.str("direction"));
  std::vector<transitions::ActionSequence> seqs;
  for (const auto& t : trees) seqs.push_back(transitions::oracle(t, dir));
  const auto output = cfg.required("output");
  transitions::write_action_file(output, dir, seqs);
  write_echo(cfg, output);
}

// ---- teachers ----

void run_train_teacher(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = load_corpus(cfg.required("input"), vocab);
  const auto dir = transitions::parse_direction(cfg.str("direction"));
  const auto kind = cfg.str("kind");
  const auto output = cfg.required("output");
  const std::string stream = "teacher-" + kind + "-" + std::string(transitions::direction_name(dir));
  if (kind == "unigram") {
    teachers::UnigramModel::train(data.ids, vocab.size(), cfg.real("smoothing"), dir).save(output, vocab);
  } else if (kind == "ngram") {
    teachers::NGramModel::train(data.ids, vocab.size(), static_cast<int>(cfg.integer("order")),
                                cfg.real("discount"), dir)
        .save(output, vocab);
  } else if (kind == "recurrent") {
    std::vector<double> hist;
    const auto m = teachers::RecurrentLM::train(data.ids, vocab.size(), dir, train_config(cfg, stream), &hist);
    log_history(cfg, hist, "nll");
    m.save(output, vocab.hash());
  } else if (kind == "syntactic") {
    std::vector<double> hist;
    const auto m = teachers::SyntacticLM::train(data.trees, vocab, dir, train_config(cfg, stream), &hist);
    log_history(cfg, hist, "action nll");
    m.save(output, vocab.hash());
  } else {
    throw UsageError("unknown teacher kind '" + kind + "' (unigram|ngram|recurrent|syntactic)");
  }
  write_echo(cfg, output);
}

struct LoadedTeachers {
  std::unique_ptr<teachers::AnyTeacher> fwd, rev;
  std::unique_ptr<teachers::UnigramModel> q;
};

LoadedTeachers load_teachers(const RunConfig& cfg, const Vocabulary& vocab) {
  LoadedTeachers t;
  if (cfg.has("fwd")) t.fwd = std::make_unique<teachers::AnyTeacher>(teachers::AnyTeacher::load(cfg.str("fwd"), vocab));
  if (cfg.has("rev")) t.rev = std::make_unique<teachers::AnyTeacher>(teachers::AnyTeacher::load(cfg.str("rev"), vocab));
  if (cfg.has("unigram")) {
    t.q = std::make_unique<teachers::UnigramModel>(teachers::UnigramModel::load(cfg.str("unigram"), vocab));
  }
  return t;
}

std::vector<posterior::Method> methods_of(const RunConfig& cfg) {
  std::vector<posterior::Method> out;
  for (const auto& m : cfg.list("method")) out.push_back(posterior::parse_method(m));
  if (out.empty()) throw UsageError("no posterior method given");
  return out;
}

posterior::ReportInput report_input(const RunConfig& cfg, const LoadedTeachers& t, const Corpus& data) {
  if (!t.fwd) throw UsageError(cfg.command() + ": --fwd is required");
  posterior::ReportInput in;
  in.fwd = t.fwd.get();
  in.rev = t.rev.get();
  in.q = t.q.get();
  in.corpus = &data.ids;
  in.trees = &data.trees;
  in.jobs = jobs(cfg);
  return in;
}

void run_posterior(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = load_corpus(cfg.required("input"), vocab, cfg.u64("limit"));
  const auto t = load_teachers(cfg, vocab);
  const auto est = posterior::corpus_posteriors(methods_of(cfg), report_input(cfg, t, data));
  write_output(cfg, posterior::format_posterior_dump(est, cfg.u64("top-k"), vocab.hash()));
}

void run_report(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = load_corpus(cfg.required("input"), vocab, cfg.u64("limit"));
  const auto t = load_teachers(cfg, vocab);
  const auto rep = posterior::posterior_report(methods_of(cfg), report_input(cfg, t, data));
  write_output(cfg, rep.to_tsv());
  for (const auto& r : rep.rows) {
    log(cfg, std::string(posterior::method_report_name(r.method)) + " nll " + format_double(r.nll));
  }
}

// ---- distillation ----

void run_corrupt(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = load_corpus(cfg.required("input"), vocab);
  distill::CorruptionConfig cc;
  cc.rate = cfg.real("rate");
  cc.mask_share = cfg.real("mask-share");
  cc.random_share = cfg.real("random-share");
  cc.keep_share = cfg.real("keep-share");
  cc.validate();
  const auto masks = distill::corrupt_corpus(data.ids, vocab.size(), cfg.u64("seed"), cfg.u64("dupe"), cc);
  write_output(cfg, distill::format_mask_file(masks, vocab.hash()));
}

void run_make_kd(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = load_corpus(cfg.required("input"), vocab);
  const auto masks = distill::parse_mask_file(read_file(cfg.required("masks")), vocab.hash());
  const auto mode = distill::parse_mode(cfg.str("mode"));
  const auto t = load_teachers(cfg, vocab);
  const distill::TeacherBundle bundle{t.fwd.get(), t.rev.get(), t.q.get()};
  const auto top_k = cfg.u64("top-k");
  distill::KdDataset d;
  d.vocab_hash = vocab.hash();
  d.top_k = top_k;
  d.alpha = cfg.real("alpha");
  d.mode = mode;
  d.records.resize(masks.size());
  parallel_for(masks.size(), jobs(cfg), [&](std::size_t r) {
    const auto& m = masks[r];
    if (m.sentence >= data.ids.size() || data.ids[m.sentence] != m.record.original) {
      throw DataError("masks record " + std::to_string(r + 1) + " does not match the corpus");
    }
    d.records[r].corruption = m.record;
    d.records[r].targets =
        distill::build_targets(mode, bundle, m.record.original, m.record.masked, &data.trees[m.sentence], top_k);
  });
  write_output(cfg, distill::format_kd_dataset(d));
  log(cfg, std::to_string(d.records.size()) + " records, " + std::to_string(d.masked_positions()) + " targets");
}

void run_train_student(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto data = distill::read_kd_dataset(cfg.required("data"), vocab.hash());
  const double alpha = cfg.has("alpha") ? cfg.real("alpha") : data.alpha;
  std::vector<double> hist;
  const auto m = student::train_student(data, vocab.size(), alpha, train_config(cfg, "student"), &hist);
  log_history(cfg, hist, "loss");
  const auto output = cfg.required("output");
  m.save(output, vocab.hash());
  write_echo(cfg, output);
}

// ---- probing ----

void run_probe(const RunConfig& cfg) {
  const auto vocab = load_vocab(cfg);
  const auto train = probe::read_probe_dataset(cfg.required("train"));
  const auto test = probe::read_probe_dataset(cfg.required("test"));
  const auto control_seed =
      cfg.has("control-seed") ? cfg.u64("control-seed") : derive_seed(cfg.u64("seed"), "control");
  probe::ProbeConfig pc;
  pc.learning_rate = cfg.real("probe-learning-rate");
  pc.epochs = static_cast<int>(cfg.integer("probe-epochs"));
  pc.seed = derive_seed(cfg.u64("seed"), "probe");
  const auto specs = cfg.list("model");
  if (specs.empty()) throw UsageError("probe: give at least one --model name=path");
  std::vector<probe::ProbeResult> rows;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--model expects name=path, got '" + spec + "'");
    const auto name = spec.substr(0, eq), path = spec.substr(eq + 1);
    std::unique_ptr<student::StudentModel> m;
    if (path == "random") {
      m = std::make_unique<student::StudentModel>(vocab.size(), train_config(cfg, "random-student"));
    } else {
      m = std::make_unique<student::StudentModel>(student::StudentModel::load(path, vocab.size(), vocab.hash()));
    }
    const probe::Encoder enc = [&m](std::span<const TokenId> ids) { return m->encode(ids); };
    rows.push_back(probe::run_probe(name, enc, vocab, train, test, control_seed, pc, jobs(cfg)));
    log(cfg, name + " probe " + format_double(rows.back().probe_accuracy) + " control " +
                 format_double(rows.back().control_accuracy));
  }
  write_output(cfg, probe::format_probe_report(rows));
}

// ---- bench ----

void run_bench(const RunConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto sigma = cfg.u64("sigma"), len = cfg.u64("length"), n = cfg.u64("sentences");
  if (sigma < 2 || len < 1 || n < 1) throw UsageError("bench needs sigma >= 2, length >= 1, sentences >= 1");
  const std::size_t v = corpus::kNumReserved + sigma;
  const auto seed = cfg.u64("seed");
  auto tc = train_config(cfg, "bench-fwd");
  const teachers::RecurrentLM fwd(v, tc, Direction::kL2R);
  tc.seed = derive_seed(seed, "bench-rev");
  const teachers::RecurrentLM rev(v, tc, Direction::kR2L);
  Rng rng(derive_seed(seed, "bench-data"));
  std::vector<std::vector<TokenId>> sents(n, std::vector<TokenId>(len));
  for (auto& s : sents) {
    for (auto& w : s) w = static_cast<TokenId>(corpus::kNumReserved + rng.below(sigma));
  }
  const auto q = teachers::UnigramModel::train(sents, v, 1.0);

  const auto t0 = Clock::now();
  double sink = 0.0;
  for (const auto& s : sents) {
    for (std::size_t i = 0; i < len; ++i) sink += posterior::exact_posterior(fwd, s, i).dist[s[i]];
  }
  const auto t1 = Clock::now();
  // The approximation is cheap; repeat it so the timer has something to measure.
  const std::size_t reps = cfg.u64("approx-repeats");
  for (std::size_t r = 0; r < reps; ++r) {
    for (const auto& s : sents) {
      for (std::size_t i = 0; i < len; ++i) sink += posterior::approx_posterior(fwd, rev, &q, s, i).dist[s[i]];
    }
  }
  const auto t2 = Clock::now();
  const double exact_s = std::chrono::duration<double>(t1 - t0).count();
  const double approx_s = std::chrono::duration<double>(t2 - t1).count();
  const double positions = static_cast<double>(n * len);
  const double exact_rate = positions / exact_s, approx_rate = positions * static_cast<double>(reps) / approx_s;
  std::string out = "method\tpositions\tseconds\tpositions_per_second\n";
  out += "exact\t" + std::to_string(n * len) + "\t" + format_double(exact_s) + "\t" + format_double(exact_rate) + "\n";
  out += "ug\t" + std::to_string(n * len * reps) + "\t" + format_double(approx_s) + "\t" +
         format_double(approx_rate) + "\n";
  out += "speedup\t\t\t" + format_double(approx_rate / exact_rate) + "\n";
  write_output(cfg, out);
  log(cfg, "speedup " + format_double(approx_rate / exact_rate) + " (checksum " + format_double(sink) + ")");
}

std::vector<Command> build_commands() {
  const std::vector<KeySpec> teacher_paths = {
      {"fwd", "", "left-to-right teacher"},
      {"rev", "", "right-to-left teacher"},
      {"unigram", "", "unigram model (the q of the unigram-prior product)"}};
  auto with = [](std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<Command> c;
  c.push_back({{"trees",
                {{"input", "", "tree file"},
                 {"output", "", "output tree file"},
                 {"subwordify", "false", "input holds plain trees; split words into WORD-wrapped pieces", true},
                 {"probe-labels", "", "also write a token/LABEL probe dataset here"},
                 {"chain", "3", "supertag label chain length"}}},
               "validate trees; optionally subwordify and derive probe labels",
               run_trees});
  c.push_back({{"sample",
                {{"grammar", "", "PCFG file"},
                 {"n", "1000", "number of trees"},
                 {"depth-cap", "32", "maximum derivation depth"},
                 {"output", "", "output tree file"}}},
               "sample a tree corpus from a PCFG",
               run_sample});
  c.push_back({{"oracle",
                {{"input", "", "WORD-augmented tree file"},
                 {"direction", "l2r", "l2r or r2l"},
                 {"output", "", "action file"}}},
               "write oracle action sequences",
               run_oracle});
  c.push_back({{"train-teacher",
                with_network_keys({{"kind", "recurrent", "unigram|ngram|recurrent|syntactic"},
                                   {"direction", "l2r", "l2r or r2l"},
                                   {"input", "", "WORD-augmented training trees"},
                                   {"output", "", "model file"},
                                   {"smoothing", "1", "unigram add-k smoothing"},
                                   {"order", "2", "n-gram order"},
                                   {"discount", "0.75", "n-gram absolute discount"}})},
               "train a teacher language model",
               run_train_teacher});
  c.push_back({{"posterior",
                with({{"input", "", "WORD-augmented evaluation trees"},
                      {"method", "ug", "comma list of exact|uf|ug|moe|l2r|r2l"},
                      {"top-k", "64", "entries kept per position"},
                      {"limit", "0", "use only the first N sentences (0 = all)"},
                      {"output", "", "posterior dump"}},
                     teacher_paths)},
               "dump per-position posterior estimates",
               run_posterior});
  c.push_back({{"report",
                with({{"input", "", "WORD-augmented evaluation trees"},
                      {"method", "moe,uf,ug,exact", "comma list of methods, one row each"},
                      {"limit", "0", "use only the first N sentences (0 = all)"},
                      {"output", "", "report TSV"}},
                     teacher_paths)},
               "posterior NLL table",
               run_report});
  c.push_back({{"corrupt",
                {{"input", "", "WORD-augmented trees"},
                 {"rate", "0.15", "selection rate"},
                 {"mask-share", "0.8", "share of selected positions replaced by <mask>"},
                 {"random-share", "0.1", "share replaced by a random token"},
                 {"keep-share", "0.1", "share left unchanged"},
                 {"dupe", "1", "maskings per sentence"},
                 {"output", "", "masks file"}}},
               "choose masked positions for every sentence",
               run_corrupt});
  c.push_back({{"make-kd",
                with({{"input", "", "WORD-augmented trees the masks were drawn from"},
                      {"masks", "", "masks file from corrupt"},
                      {"mode", "ug", "none|l2r|r2l|uf|ug|seq"},
                      {"top-k", "64", "target entries kept per position"},
                      {"alpha", "0.5", "default interpolation weight recorded in the dataset"},
                      {"output", "", "KD dataset"}},
                     teacher_paths)},
               "build a distillation dataset",
               run_make_kd});
  c.push_back({{"train-student",
                with_network_keys({{"data", "", "KD dataset"},
                                   {"alpha", "", "interpolation weight (default: the dataset's)"},
                                   {"output", "", "student checkpoint"}},
                                  {{"learning-rate", "1"}, {"epochs", "10"}, {"decay-start", "5"}})},
               "train a masked-LM student",
               run_train_student});
  c.push_back({{"probe",
                with_network_keys({{"model", "", "comma list of name=checkpoint (or name=random)"},
                                   {"train", "", "probe training set"},
                                   {"test", "", "probe test set"},
                                   {"control-seed", "", "control task seed (default: derived from seed)"},
                                   {"probe-learning-rate", "0.1", "probe SGD learning rate"},
                                   {"probe-epochs", "50", "probe epochs"},
                                   {"output", "", "probe report TSV"}})},
               "linear probe with a control task",
               run_probe});
  c.push_back({{"bench",
                with_network_keys({{"sigma", "200", "non-reserved vocabulary size"},
                                   {"length", "20", "sentence length"},
                                   {"sentences", "2", "sentences scored"},
                                   {"approx-repeats", "50", "repetitions of the approximate pass"},
                                   {"output", "", "timing TSV"}})},
               "exact versus approximate posterior throughput",
               run_bench});
  return c;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> all = build_commands();
  return all;
}

std::vector<CommandSpec> command_specs() {
  std::vector<CommandSpec> out;
  for (const auto& c : commands()) out.push_back(c.spec);
  return out;
}

std::string version_text() {
  return "sdistill 1.0.0\n"
         "tree-file 1\n"
         "action-file 1\n"
         "vocab-file 1\n"
         "checkpoint " + std::to_string(neural::kCheckpointVersion) + "\n"
         "unigram-model 1\n"
         "ngram-model 1\n"
         "posterior-dump " + std::to_string(posterior::kDumpVersion) + "\n"
         "masks " + std::to_string(distill::kMaskFormatVersion) + "\n"
         "kd-dataset " + std::to_string(distill::kKdFormatVersion) + "\n"
         "probe-dataset 1\n"
         "config 1\n";
}

}  // namespace sdistill::cli
