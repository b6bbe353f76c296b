// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `acceptance 3 7` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "commands.hpp"
#include "fd_check.hpp"
#include "sdistill/corpus/pcfg.hpp"
#include "sdistill/corpus/tokenizer.hpp"
#include "sdistill/corpus/tree.hpp"
#include "sdistill/distill/corrupt.hpp"
#include "sdistill/distill/kd_loss.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/posterior/posterior.hpp"
#include "sdistill/probe/probe.hpp"
#include "sdistill/student/student.hpp"
#include "sdistill/teachers/enumeration.hpp"
#include "sdistill/teachers/ngram.hpp"
#include "sdistill/teachers/recurrent.hpp"
#include "sdistill/teachers/registry.hpp"
#include "sdistill/teachers/syntactic.hpp"
#include "sdistill/teachers/unigram.hpp"
#include "sdistill/transitions/oracle.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"
#include "test_support.hpp"

using namespace sdistill;
using corpus::PhraseTree;
using corpus::TokenId;
using posterior::Method;
using transitions::Direction;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kEnumTol = 1e-12;
constexpr double kBigramTol = 1e-9;
constexpr double kMinSpeedup = 10.0;
constexpr double kFdTol = 1e-4;
constexpr double kFdEps = 1e-5;
constexpr double kMixTol = 1e-9;
const std::uint64_t kSeeds[] = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("sdistill_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs one CLI subcommand in-process.
void run_command(const std::string& name, const std::vector<std::pair<std::string, std::string>>& settings) {
  for (const auto& c : cli::commands()) {
    if (c.spec.name != name) continue;
    cli::RunConfig cfg(name, cli::command_specs());
    for (const auto& [k, v] : settings) cfg.set_from_cli(k, v);
    c.run(cfg);
    return;
  }
  throw std::logic_error("no command " + name);
}

std::vector<PhraseTree> sample_trees(const corpus::Pcfg& g, std::size_t n, std::uint64_t seed) {
  std::vector<PhraseTree> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back(corpus::sample_pcfg(g, derive_seed(seed, "sample", s)));
  return out;
}

// ---- 1 ----
Outcome oracle_golden() {
  const auto example = testing::data_path("demo/example.tree");
  std::string detail;
  bool ok = true;
  for (Direction d : {Direction::kL2R, Direction::kR2L}) {
    const std::string dn(transitions::direction_name(d));
    const auto out = (work_dir() / ("example_" + dn + ".actions")).string();
    run_command("oracle", {{"input", example}, {"direction", dn}, {"output", out}});
    const auto golden = read_file(testing::golden_path("example_" + dn + ".actions"));
    const bool same = read_file(out) == golden;
    Direction parsed;
    const auto seqs = transitions::parse_action_file(golden, &parsed);
    ok = ok && same && seqs.size() == 1 && seqs[0].size() == 18;
    detail += dn + (same ? " byte-identical " : " DIFFERS ");
  }
  return {ok, detail + "(18 actions each)"};
}

// ---- 2 ----
Outcome round_trip() {
  const auto trees = sample_trees(testing::demo_grammar(), 1000, 42);
  std::size_t failures = 0, checked = 0;
  for (const auto& raw : trees) {
    const auto t = corpus::subwordify(raw, testing::demo_tokenizer());
    for (Direction d : {Direction::kL2R, Direction::kR2L}) {
      ++checked;
      try {
        if (transitions::replay(transitions::oracle(t, d), d) != t) ++failures;
      } catch (const std::exception&) {
        ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(checked) + " round trips, " + std::to_string(failures) + " failures"};
}

// ---- 3 ----
Outcome enumeration_oracle() {
  const auto strings = corpus::enumerate_pcfg(testing::demo_grammar());
  const auto support = teachers::tokenize_support(strings, testing::demo_tokenizer());
  const auto v = testing::demo_vocab().size();
  const teachers::EnumerationLM lm(v, support);
  std::map<std::vector<TokenId>, double> joint;
  for (const auto& s : support) joint[s.tokens] += s.prob;
  double worst = 0.0;
  std::size_t positions = 0;
  for (const auto& [x, p] : joint) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> cond(v, 0.0);
      double z = 0.0;
      auto y = x;
      for (std::size_t w = corpus::kNumReserved; w < v; ++w) {
        y[i] = static_cast<TokenId>(w);
        const auto it = joint.find(y);
        cond[w] = it == joint.end() ? 0.0 : it->second;
        z += cond[w];
      }
      const auto e = posterior::exact_posterior(lm, x, i);
      for (std::size_t w = corpus::kNumReserved; w < v; ++w) worst = std::max(worst, std::abs(e.dist[w] - cond[w] / z));
      ++positions;
    }
  }
  return {worst < kEnumTol, std::to_string(joint.size()) + " strings, " + std::to_string(positions) +
                                " positions, max abs diff " + fmt(worst)};
}

// ---- 4 ----
Outcome bigram_exactness() {
  const auto demo = testing::demo_corpus(1000, 4);
  const auto v = testing::demo_vocab().size();
  const auto fwd = teachers::NGramModel::train(demo.ids, v, 2, 0.0, Direction::kL2R);
  const auto rev = teachers::NGramModel::train(demo.ids, v, 2, 0.0, Direction::kR2L);
  const auto q = teachers::UnigramModel::train(demo.ids, v, 0.0);
  double worst = 0.0;
  std::size_t positions = 0;
  for (const auto& x : demo.ids) {
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
      const auto ex = posterior::exact_posterior(fwd, x, i);
      const auto ap = posterior::approx_posterior(fwd, rev, &q, x, i);
      for (std::size_t w = 0; w < v; ++w) {
        const double d = std::abs(ex.dist[w] - ap.dist[w]);
        if (d > 0) worst = std::max(worst, d / std::max(ex.dist[w], ap.dist[w]));
      }
      ++positions;
    }
  }
  return {worst < kBigramTol, std::to_string(positions) + " interior positions, max rel diff " + fmt(worst)};
}

// ---- 5 and 10: LSTM teachers trained per seed ----
struct TeacherRun {
  std::uint64_t seed;
  std::vector<std::vector<TokenId>> test_ids;
  std::vector<PhraseTree> test_raw, test_trees;
  std::shared_ptr<teachers::RecurrentLM> fwd, rev;
  std::shared_ptr<teachers::UnigramModel> q;
};

struct SampledCorpus {
  std::vector<PhraseTree> raw, trees;
  std::vector<std::vector<TokenId>> ids;
};

SampledCorpus sample_corpus(const corpus::Pcfg& g, const corpus::Tokenizer& tok, std::size_t n, std::uint64_t seed) {
  SampledCorpus c;
  c.raw = sample_trees(g, n, seed);
  for (const auto& t : c.raw) {
    c.trees.push_back(corpus::subwordify(t, tok));
    c.ids.push_back(tok.vocabulary().encode(corpus::leaves(c.trees.back())));
  }
  return c;
}

std::vector<TeacherRun> train_teacher_runs(const std::string& grammar, const std::string& vocab_file,
                                           std::size_t n_train) {
  const auto g = corpus::Pcfg::load(testing::data_path(grammar));
  const auto vocab = corpus::Vocabulary::load(testing::data_path(vocab_file));
  const corpus::Tokenizer tok(vocab);
  neural::TrainConfig tc;
  tc.epochs = 15;
  tc.dropout = 0.2;
  std::vector<TeacherRun> out;
  for (std::uint64_t seed : kSeeds) {
    TeacherRun r;
    r.seed = seed;
    const auto train = sample_corpus(g, tok, n_train, seed);
    auto test = sample_corpus(g, tok, 300, seed + 1000);
    r.test_ids = std::move(test.ids);
    r.test_raw = std::move(test.raw);
    r.test_trees = std::move(test.trees);
    tc.seed = derive_seed(seed, "teacher-fwd");
    r.fwd = std::make_shared<teachers::RecurrentLM>(
        teachers::RecurrentLM::train(train.ids, vocab.size(), Direction::kL2R, tc));
    tc.seed = derive_seed(seed, "teacher-rev");
    r.rev = std::make_shared<teachers::RecurrentLM>(
        teachers::RecurrentLM::train(train.ids, vocab.size(), Direction::kR2L, tc));
    r.q = std::make_shared<teachers::UnigramModel>(teachers::UnigramModel::train(train.ids, vocab.size()));
    out.push_back(std::move(r));
  }
  return out;
}

Outcome posterior_ordering() {
  int good = 0;
  std::string detail;
  // The Zipfian lexicon grammar: a flat word distribution would make the
  // unigram prior a near no-op and the Unigram/Uniform comparison a tie.
  for (const auto& r : train_teacher_runs("demo/lexicon.pcfg", "demo/lexicon_vocab.txt", 5000)) {
    const teachers::AnyTeacher f(std::static_pointer_cast<const teachers::Teacher>(r.fwd));
    const teachers::AnyTeacher b(std::static_pointer_cast<const teachers::Teacher>(r.rev));
    posterior::ReportInput in;
    in.fwd = &f;
    in.rev = &b;
    in.q = r.q.get();
    in.corpus = &r.test_ids;
    const Method methods[] = {Method::kMoE, Method::kUF, Method::kUG, Method::kExact};
    const auto rep = posterior::posterior_report(methods, in);
    const double moe = rep.rows[0].nll, uf = rep.rows[1].nll, ug = rep.rows[2].nll, ex = rep.rows[3].nll;
    const bool ok = ex <= ug && ug <= uf && ug <= moe;
    good += ok;
    detail += "seed " + std::to_string(r.seed) + ": exact " + fmt(ex) + " ug " + fmt(ug) + " uf " + fmt(uf) +
              " moe " + fmt(moe) + (ok ? " ok; " : " VIOLATED; ");
  }
  return {good >= 2, std::to_string(good) + "/3 seeds ordered; " + detail};
}

// ---- 6 ----
Outcome speedup() {
  const auto out = (work_dir() / "bench.tsv").string();
  run_command("bench", {{"output", out}});
  double s = 0.0;
  for (const auto& line : read_lines(out)) {
    const auto f = split(line, '\t');
    if (!f.empty() && f[0] == "speedup") s = parse_double(f.back());
  }
  return {s >= kMinSpeedup, "approx/exact throughput " + fmt(s) + "x at |sigma|=200, k=20 (need >= 10)"};
}

// ---- 7 ----
Outcome gradient_suite() {
  const auto& vocab = testing::demo_vocab();
  neural::TrainConfig cfg;
  cfg.hidden = 5;
  cfg.embedding = 4;
  cfg.init_scale = 0.5;
  cfg.epochs = 1;
  std::vector<std::pair<std::string, double>> worst;

  {
    auto c = cfg;
    c.layers = 2;
    teachers::RecurrentLM m(vocab.size(), c, Direction::kL2R);
    const std::vector<TokenId> seq = vocab.encode(split_whitespace("the cat sees my window"));
    Rng rng(1);
    worst.emplace_back("recurrent", testing::finite_difference_check(
                                        m.params(), [&](neural::Graph& g) { return m.build_loss(g, seq, rng); }, kFdEps)
                                        .max_rel);
  }
  {
    const auto tree = corpus::read_tree_file(testing::data_path("demo/example.tree"))[0];
    for (Direction d : {Direction::kL2R, Direction::kR2L}) {
      teachers::SyntacticLM m(vocab.size(), {"NP", "S", "VP", "WORD"}, cfg, d);
      const auto actions = m.encode_oracle(tree, vocab);
      worst.emplace_back("syntactic-" + std::string(transitions::direction_name(d)),
                         testing::finite_difference_check(
                             m.params(), [&](neural::Graph& g) { return m.build_loss(g, actions); }, kFdEps)
                             .max_rel);
    }
  }
  {
    student::StudentModel m(vocab.size(), cfg);
    distill::KdRecord rec;
    rec.corruption.original = vocab.encode(split_whitespace("the cat sees my window"));
    rec.corruption.corrupted = rec.corruption.original;
    rec.corruption.corrupted[1] = corpus::kMask;
    rec.corruption.corrupted[3] = vocab.id("keys");
    rec.corruption.masked = {1, 3};
    rec.targets.push_back({1, rec.corruption.original[1], {{vocab.id("cat"), 0.6}, {vocab.id("key"), 0.4}}});
    rec.targets.push_back({3, rec.corruption.original[3], {{vocab.id("my"), 1.0}}});
    worst.emplace_back("student", testing::finite_difference_check(
                                      m.params(), [&](neural::Graph& g) { return m.build_loss(g, rec, 0.4); }, kFdEps)
                                      .max_rel);
  }
  {
    // Linear probe: the SGD update with lr 1 is minus the gradient.
    Rng rng(3);
    probe::LinearProbe p(4, 6);
    for (auto& w : p.weights()) w = rng.uniform(-0.5, 0.5);
    for (auto& b : p.bias()) b = rng.uniform(-0.5, 0.5);
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const std::size_t label = 2;
    auto loss = [&](probe::LinearProbe q) {
      std::vector<double> s(4);
      for (std::size_t c = 0; c < 4; ++c) {
        s[c] = q.bias()[c];
        for (std::size_t j = 0; j < 6; ++j) s[c] += q.weights()[c * 6 + j] * x[j];
      }
      return neural::logsumexp(s) - s[label];
    };
    auto stepped = p;
    stepped.sgd_update(x, label, 1.0);
    double w_rel = 0.0;
    for (std::size_t k = 0; k < p.weights().size(); ++k) {
      auto up = p, down = p;
      up.weights()[k] += kFdEps;
      down.weights()[k] -= kFdEps;
      const double num = (loss(up) - loss(down)) / (2 * kFdEps);
      const double ana = p.weights()[k] - stepped.weights()[k];
      w_rel = std::max(w_rel, std::abs(num - ana) / std::max({1e-4, std::abs(num), std::abs(ana)}));
    }
    worst.emplace_back("probe", w_rel);
  }
  {
    Rng rng(4);
    std::vector<std::vector<double>> logits(3, std::vector<double>(7)), targets(3, std::vector<double>(7));
    for (auto& l : logits) for (auto& v : l) v = rng.uniform(-2, 2);
    for (auto& t : targets) {
      double z = 0;
      for (auto& v : t) z += (v = rng.uniform());
      for (auto& v : t) v /= z;
    }
    const std::vector<TokenId> truth = {1, 4, 6};
    const auto kd = distill::kd_loss(logits, targets, truth, 0.3);
    double w = 0.0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t j = 0; j < 7; ++j) {
        auto up = logits, down = logits;
        up[p][j] += kFdEps;
        down[p][j] -= kFdEps;
        const double num = (distill::kd_loss(up, targets, truth, 0.3).loss -
                            distill::kd_loss(down, targets, truth, 0.3).loss) /
                           (2 * kFdEps);
        w = std::max(w, std::abs(num - kd.logit_grads[p][j]) / std::max({1e-4, std::abs(num)}));
      }
    }
    worst.emplace_back("kd-loss", w);
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, rel] : worst) {
    ok = ok && rel < kFdTol;
    detail += name + " " + fmt(rel, 2) + "; ";
  }
  return {ok, "max rel error " + detail};
}

// ---- 8 ----
Outcome kd_identities() {
  Rng rng(8);
  double worst_mix = 0.0;
  int bitwise_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 3 + rng.below(30), pos = 1 + rng.below(6);
    std::vector<std::vector<double>> logits(pos), targets(pos);
    std::vector<TokenId> truths(pos);
    for (std::size_t p = 0; p < pos; ++p) {
      logits[p].resize(n);
      for (auto& l : logits[p]) l = rng.uniform(-5, 5);
      targets[p].resize(n);
      double z = 0.0;
      for (auto& t : targets[p]) z += (t = rng.uniform() * rng.uniform());
      for (auto& t : targets[p]) t /= z;
      truths[p] = static_cast<TokenId>(rng.below(n));
    }
    const double alpha = rng.uniform();
    const auto kd = distill::kd_loss(logits, targets, truths, alpha);
    double mixed = 0.0, plain = 0.0;
    for (std::size_t p = 0; p < pos; ++p) {
      const auto t = distill::mixed_target(targets[p], truths[p], alpha);
      const auto sm = neural::softmax(logits[p]);
      for (std::size_t w = 0; w < n; ++w) mixed -= t[w] * std::log(sm[w]);
      // Masked-LM loss: cross-entropy of the one-hot truth, averaged over positions.
      neural::Graph g;
      std::vector<double> onehot(n, 0.0);
      onehot[truths[p]] = 1.0;
      plain += (1.0 / pos) * g.scalar(g.softmax_cross_entropy(g.constant({n, 1}, logits[p]), onehot));
    }
    worst_mix = std::max(worst_mix, std::abs(kd.loss - mixed / pos));
    if (distill::kd_loss(logits, targets, truths, 0.0).loss != plain) ++bitwise_fail;
  }
  return {worst_mix < kMixTol && bitwise_fail == 0,
          "alpha=0 bitwise mismatches " + std::to_string(bitwise_fail) + "/1000; max |interp - mixed CE| " +
              fmt(worst_mix)};
}

// ---- 9 ----
Outcome corruption_stats() {
  const std::size_t v = 35;
  std::vector<TokenId> x(100000);
  Rng rng(9);
  for (auto& t : x) t = static_cast<TokenId>(corpus::kNumReserved + rng.below(v - corpus::kNumReserved));
  const auto r = distill::corrupt(x, v, 99);
  double mask = 0, changed = 0, kept = 0;
  for (auto i : r.masked) {
    if (r.corrupted[i] == corpus::kMask) ++mask;
    else if (r.corrupted[i] != x[i]) ++changed;
    else ++kept;
  }
  const double n = static_cast<double>(r.masked.size());
  const double sel = n / static_cast<double>(x.size());
  // A random replacement can redraw the original token; count those as random.
  const double same_draw = 1.0 / static_cast<double>(v - corpus::kNumReserved);
  const double random_share = changed / n / (1.0 - same_draw);
  const double keep_share = 1.0 - mask / n - random_share;
  const bool ok = sel >= 0.146 && sel <= 0.154 && std::abs(mask / n - 0.8) <= 0.01 &&
                  std::abs(random_share - 0.1) <= 0.01 && std::abs(keep_share - 0.1) <= 0.01;
  return {ok, "selected " + fmt(sel) + ", mask " + fmt(mask / n) + ", random " + fmt(random_share) + ", keep " +
                  fmt(keep_share)};
}

// ---- 10 ----
std::string number_of(const std::string& label) {
  if (label.size() > 3 && label.compare(label.size() - 3, 3, "_SG") == 0) return "SG";
  if (label.size() > 3 && label.compare(label.size() - 3, 3, "_PL") == 0) return "PL";
  return "";
}

Outcome agreement_direction() {
  const auto& vocab = testing::demo_vocab();
  std::map<std::string, std::set<TokenId>> verbs;  // number -> verb ids
  for (const auto& rule : testing::demo_grammar().rules()) {
    if (!rule.is_terminal() || rule.lhs.empty() || rule.lhs[0] != 'V') continue;
    verbs[number_of(rule.lhs)].insert(vocab.id(rule.terminal));
  }
  int good = 0;
  std::string detail;
  for (const auto& r : train_teacher_runs("demo/agreement.pcfg", "demo/vocab.txt", 3000)) {
    double m_l2r = 0.0, m_ug = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < r.test_raw.size(); ++s) {
      const auto& raw = r.test_raw[s];
      const auto& subj = raw.children[0];
      if (subj.children.size() != 2 || subj.children[1].label != "PP") continue;
      const std::string num = number_of(subj.label);
      if (number_of(subj.children[1].children[1].label) == num) continue;  // no attractor
      const auto& x = r.test_ids[s];
      const std::size_t i = corpus::leaves(r.test_trees[s].children[0]).size();
      const auto l2r = posterior::restrict_to_sigma(r.fwd->next_dist(std::span<const TokenId>(x.data(), i)));
      const auto ug = posterior::approx_posterior(*r.fwd, *r.rev, r.q.get(), x, i).dist;
      for (TokenId w : verbs[num]) {
        m_l2r += l2r[w];
        m_ug += ug[w];
      }
      ++count;
    }
    m_l2r /= static_cast<double>(count);
    m_ug /= static_cast<double>(count);
    const bool ok = count > 0 && m_ug > m_l2r;
    good += ok;
    detail += "seed " + std::to_string(r.seed) + ": " + std::to_string(count) + " attractor sentences, ug " +
              fmt(m_ug) + " vs l2r " + fmt(m_l2r) + (ok ? " ok; " : " NOT HIGHER; ");
  }
  return {good >= 2, std::to_string(good) + "/3 seeds; " + detail};
}

// ---- 11 ----
struct DistillSettings {
  std::size_t train = 2000, test = 300;
  int teacher_epochs = 10;
  int student_epochs = 20;
  int dupe = 2;
  std::string alpha = "0.5";
};

Outcome distillation_direction() {
  const DistillSettings ds;
  const auto grammar = testing::data_path("demo/lexicon.pcfg");
  const auto vocab = testing::data_path("demo/lexicon_vocab.txt");
  std::vector<double> sel_none, sel_ug;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const auto dir = work_dir() / ("distill_" + std::to_string(seed));
    fs::create_directories(dir);
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    const std::string sd = std::to_string(seed);
    const std::vector<std::pair<std::string, std::string>> base = {{"vocab", vocab}, {"seed", sd}};
    auto with = [&](std::vector<std::pair<std::string, std::string>> kv) {
      kv.insert(kv.end(), base.begin(), base.end());
      return kv;
    };
    run_command("sample", {{"grammar", grammar}, {"n", std::to_string(ds.train)}, {"seed", sd}, {"output", p("train.raw")}});
    run_command("sample", {{"grammar", grammar}, {"n", std::to_string(ds.test)}, {"seed", std::to_string(seed + 1000)},
                           {"output", p("test.raw")}});
    for (const std::string split : {"train", "test"}) {
      run_command("trees", with({{"input", p(split + ".raw")}, {"subwordify", "true"},
                                 {"probe-labels", p(split + ".probe")}, {"output", p(split + ".tree")}}));
    }
    run_command("train-teacher", with({{"kind", "unigram"}, {"input", p("train.tree")}, {"output", p("uni.model")}}));
    for (const std::string d : {"l2r", "r2l"}) {
      run_command("train-teacher", with({{"kind", "syntactic"}, {"direction", d}, {"input", p("train.tree")},
                                         {"epochs", std::to_string(ds.teacher_epochs)}, {"output", p("syn_" + d + ".ckpt")}}));
    }
    run_command("corrupt", with({{"input", p("train.tree")}, {"dupe", std::to_string(ds.dupe)}, {"output", p("masks.tsv")}}));
    run_command("make-kd", with({{"input", p("train.tree")}, {"masks", p("masks.tsv")}, {"mode", "none"},
                                 {"output", p("kd_none.tsv")}}));
    run_command("make-kd", with({{"input", p("train.tree")}, {"masks", p("masks.tsv")}, {"mode", "ug"},
                                 {"fwd", p("syn_l2r.ckpt")}, {"rev", p("syn_r2l.ckpt")}, {"unigram", p("uni.model")},
                                 {"output", p("kd_ug.tsv")}}));
    run_command("train-student", with({{"data", p("kd_none.tsv")}, {"alpha", "0"},
                                       {"epochs", std::to_string(ds.student_epochs)}, {"output", p("none.ckpt")}}));
    run_command("train-student", with({{"data", p("kd_ug.tsv")}, {"alpha", ds.alpha},
                                       {"epochs", std::to_string(ds.student_epochs)}, {"output", p("ug.ckpt")}}));
    run_command("probe", with({{"model", "none=" + p("none.ckpt") + ",ug=" + p("ug.ckpt")}, {"train", p("train.probe")},
                               {"test", p("test.probe")}, {"output", p("probe.tsv")}}));
    const auto rows = read_lines(p("probe.tsv"));
    for (const auto& line : rows) {
      const auto f = split(line, '\t');
      if (f.size() < 4) continue;
      if (f[0] == "none") sel_none.push_back(parse_double(f[3]));
      if (f[0] == "ug") sel_ug.push_back(parse_double(f[3]));
      if (f[0] == "none" || f[0] == "ug") {
        detail += "seed " + sd + " " + f[0] + ": probe " + fmt(parse_double(f[1])) + " control " +
                  fmt(parse_double(f[2])) + " sel " + fmt(parse_double(f[3])) + "; ";
      }
    }
  }
  if (sel_none.size() != 3 || sel_ug.size() != 3) return {false, "probe report incomplete"};
  std::sort(sel_none.begin(), sel_none.end());
  std::sort(sel_ug.begin(), sel_ug.end());
  return {sel_ug[1] >= sel_none[1],
          "median selectivity ug " + fmt(sel_ug[1]) + " vs none " + fmt(sel_none[1]) + "; " + detail};
}

// ---- 12 ----
std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), root).string()] = hex64(fnv1a64(read_file(e.path().string())));
  }
  return out;
}

Outcome determinism() {
  std::map<std::string, std::string> hashes[2];
  const int jobs[2] = {1, 3};
  for (int k = 0; k < 2; ++k) {
    const auto dir = work_dir() / ("demo_jobs" + std::to_string(jobs[k]));
    fs::remove_all(dir);
    const std::string cmd = "SDISTILL=" + std::string(SDISTILL_BIN) + " JOBS=" + std::to_string(jobs[k]) +
                            " bash " + std::string(SDISTILL_DEMO) + " " + dir.string() + " > " + dir.string() +
                            ".log 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "demo run failed, see " + dir.string() + ".log"};
    hashes[k] = hash_tree(dir);
  }
  std::size_t differ = 0;
  std::string first;
  for (const auto& [f, h] : hashes[0]) {
    const auto it = hashes[1].find(f);
    if (it == hashes[1].end() || it->second != h) {
      if (!differ) first = f;
      ++differ;
    }
  }
  if (hashes[0].size() != hashes[1].size()) ++differ;
  return {differ == 0 && !hashes[0].empty(), std::to_string(hashes[0].size()) + " artifacts, jobs 1 vs 3, " +
                                                 std::to_string(differ) + " differ" +
                                                 (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  setenv("SDISTILL_QUIET", "1", 1);
  const std::vector<Criterion> all = {
      {1, "oracle golden files", 1, oracle_golden},
      {2, "oracle/replay round trip", 10, round_trip},
      {3, "exact posterior vs enumerated joint", 60, enumeration_oracle},
      {4, "bigram teachers make the unigram-prior product exact", 60, bigram_exactness},
      {5, "posterior NLL ordering with LSTM teachers", 600, posterior_ordering},
      {6, "approximate posterior speedup", 120, speedup},
      {7, "finite-difference gradient suite", 120, gradient_suite},
      {8, "interpolated distillation loss identities", 10, kd_identities},
      {9, "corruption statistics", 10, corruption_stats},
      {10, "agreement mass: unigram-prior product vs L2R", 300, agreement_direction},
      {11, "distillation probe selectivity: UG-KD vs No-KD", 900, distillation_direction},
      {12, "end-to-end demo determinism across --jobs", 3600, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = s <= c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("%s %2d %s [%.1fs / %.0fs%s] %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), s, c.budget_s,
                in_budget ? "" : " OVER BUDGET", o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  return failed ? 1 : 0;
}
