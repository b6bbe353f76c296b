#include "sdistill/teachers/syntactic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/transitions/oracle.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::teachers {

using neural::Graph;
using neural::Var;
using transitions::Action;
using transitions::ActionKind;

namespace {

enum Param : std::size_t {
  kNtEmbed, kWordEmbed, kStackW, kStackB, kCompFW, kCompFB, kCompBW, kCompBB, kMergeW, kMergeB,
  kActW, kActB
};

void collect_labels(const corpus::PhraseTree& t, std::set<std::string>& out) {
  if (t.is_leaf()) return;
  out.insert(t.label);
  for (const auto& c : t.children) collect_labels(c, out);
}

// One LSTM step on plain vectors: (h, c) <- LSTM(x, h, c).
void lstm_step(const neural::Tensor& w, const neural::Tensor& b, std::span<const double> x,
               std::vector<double>& h, std::vector<double>& c) {
  const std::size_t hidden = h.size();
  std::vector<double> xh(x.begin(), x.end());
  xh.insert(xh.end(), h.begin(), h.end());
  std::vector<double> gates(4 * hidden), tanh_c(hidden), c_new(hidden);
  neural::LstmStep::forward(w.data(), b.data(), hidden, xh, c, gates, h, c_new, tanh_c);
  c = std::move(c_new);
}

}  // namespace

SyntacticLM::SyntacticLM(std::size_t vocab_size, std::vector<std::string> nonterminals,
                         const neural::TrainConfig& cfg, Direction dir)
    : vocab_size_(vocab_size), nts_(std::move(nonterminals)), cfg_(cfg), dir_(dir) {
  cfg_.validate();
  if (nts_.empty()) throw DataError("syntactic LM needs at least one nonterminal");
  if (!std::is_sorted(nts_.begin(), nts_.end()) ||
      std::adjacent_find(nts_.begin(), nts_.end()) != nts_.end()) {
    throw UsageError("nonterminal inventory must be sorted and unique");
  }
  const std::size_t d = cfg.embedding, h = cfg.hidden;
  params_.add("nt_embed", {nts_.size(), d});
  params_.add("word_embed", {vocab_size, d});
  params_.add("stack.w", {4 * h, d + h});
  params_.add("stack.b", {4 * h, 1});
  params_.add("comp_f.w", {4 * d, 2 * d});
  params_.add("comp_f.b", {4 * d, 1});
  params_.add("comp_b.w", {4 * d, 2 * d});
  params_.add("comp_b.b", {4 * d, 1});
  params_.add("merge.w", {d, 2 * d});
  params_.add("merge.b", {d, 1});
  params_.add("act.w", {num_actions(), h});
  params_.add("act.b", {num_actions(), 1});
  Rng rng(derive_seed(cfg.seed, "init"));
  params_.init_uniform(rng, cfg.init_scale);
  gen_mask_ = output_mask(vocab_size);
  gen_mask_[corpus::kEos] = 0;
}

std::size_t SyntacticLM::nt_index(const std::string& label) const {
  auto it = std::lower_bound(nts_.begin(), nts_.end(), label);
  if (it == nts_.end() || *it != label) throw DataError("unknown nonterminal '" + label + "'");
  return static_cast<std::size_t>(it - nts_.begin());
}

Action SyntacticLM::to_action(std::uint32_t index) const {
  if (index == 0) return Action::reduce();
  if (index <= nts_.size()) return Action::nt(nts_[index - 1]);
  return Action::gen(std::to_string(index - 1 - nts_.size()));
}

std::vector<std::uint32_t> SyntacticLM::encode_oracle(const corpus::PhraseTree& tree,
                                                      const corpus::Vocabulary& vocab) const {
  if (vocab.size() != vocab_size_) throw DataError("vocabulary size mismatch");
  std::vector<std::uint32_t> out;
  for (const Action& a : transitions::oracle(tree, dir_)) {
    switch (a.kind) {
      case ActionKind::kReduce: out.push_back(0); break;
      case ActionKind::kNT: out.push_back(static_cast<std::uint32_t>(1 + nt_index(a.payload))); break;
      case ActionKind::kGen: out.push_back(static_cast<std::uint32_t>(gen_index(vocab.id(a.payload)))); break;
    }
  }
  return out;
}

std::vector<std::uint8_t> SyntacticLM::legal_mask(const State& s) const {
  const auto legal = transitions::legal_actions(s.ts);
  std::vector<std::uint8_t> m(num_actions(), 0);
  m[0] = legal.reduce;
  if (legal.nt) std::fill(m.begin() + 1, m.begin() + 1 + static_cast<long>(nts_.size()), 1);
  if (legal.gen) std::copy(gen_mask_.begin(), gen_mask_.end(), m.begin() + 1 + static_cast<long>(nts_.size()));
  return m;
}

Var SyntacticLM::build_loss(Graph& g, std::span<const std::uint32_t> actions) {
  struct GEntry {
    bool open;
    Var emb, h, c;
  };
  const std::size_t d = cfg_.embedding, hidden = cfg_.hidden;
  Var stack_w = g.parameter(params_.at(kStackW)), stack_b = g.parameter(params_.at(kStackB));
  Var cf_w = g.parameter(params_.at(kCompFW)), cf_b = g.parameter(params_.at(kCompFB));
  Var cb_w = g.parameter(params_.at(kCompBW)), cb_b = g.parameter(params_.at(kCompBB));
  Var m_w = g.parameter(params_.at(kMergeW)), m_b = g.parameter(params_.at(kMergeB));
  Var a_w = g.parameter(params_.at(kActW)), a_b = g.parameter(params_.at(kActB));
  const Var h0 = g.zeros(hidden), c0 = g.zeros(hidden), d0 = g.zeros(d);

  std::vector<GEntry> stack;
  State shadow;
  auto push = [&](bool open, Var emb) {
    Var h = stack.empty() ? h0 : stack.back().h;
    Var c = stack.empty() ? c0 : stack.back().c;
    auto out = g.lstm_cell(emb, h, c, stack_w, stack_b);
    stack.push_back({open, emb, out.h, out.c});
  };
  std::vector<Var> losses;
  std::vector<double> target(num_actions(), 0.0);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const std::uint32_t a = actions[t];
    if (a >= num_actions()) throw DataError("action index out of range");
    const auto mask = legal_mask(shadow);
    if (!mask[a]) throw transitions::TransitionError(t, "illegal oracle action " + to_action(a).to_string());
    Var logits = g.affine(a_w, stack.empty() ? h0 : stack.back().h, a_b);
    target[a] = 1.0;
    losses.push_back(g.softmax_cross_entropy(logits, target, mask));
    target[a] = 0.0;

    if (a == 0) {
      std::vector<Var> children;
      while (!stack.back().open) {
        children.push_back(stack.back().emb);
        stack.pop_back();
      }
      std::reverse(children.begin(), children.end());
      Var label = stack.back().emb;
      stack.pop_back();
      Var hf = d0, cf = d0, hb = d0, cb = d0;
      auto o = g.lstm_cell(label, hf, cf, cf_w, cf_b);
      hf = o.h;
      cf = o.c;
      for (Var ch : children) {
        o = g.lstm_cell(ch, hf, cf, cf_w, cf_b);
        hf = o.h;
        cf = o.c;
      }
      o = g.lstm_cell(label, hb, cb, cb_w, cb_b);
      hb = o.h;
      cb = o.c;
      for (auto it = children.rbegin(); it != children.rend(); ++it) {
        o = g.lstm_cell(*it, hb, cb, cb_w, cb_b);
        hb = o.h;
        cb = o.c;
      }
      push(false, g.tanh(g.affine(m_w, g.concat({hf, hb}), m_b)));
    } else if (a <= nts_.size()) {
      push(true, g.lookup(params_.at(kNtEmbed), a - 1));
    } else {
      push(false, g.lookup(params_.at(kWordEmbed), a - 1 - nts_.size()));
    }
    shadow.ts.apply(to_action(a));
  }
  if (!shadow.ts.terminated()) throw transitions::TransitionError(actions.size(), "incomplete oracle");
  return g.sum(losses);
}

void SyntacticLM::push_entry(State& s, Entry e) const {
  const std::size_t hidden = cfg_.hidden;
  e.h = s.stack.empty() ? std::vector<double>(hidden, 0.0) : s.stack.back().h;
  e.c = s.stack.empty() ? std::vector<double>(hidden, 0.0) : s.stack.back().c;
  lstm_step(params_.at(kStackW).value, params_.at(kStackB).value, e.emb, e.h, e.c);
  s.stack.push_back(std::move(e));
}

void SyntacticLM::action_dist(const State& s, std::span<double> out) const {
  std::vector<double> logits(num_actions());
  const std::vector<double> zero(cfg_.hidden, 0.0);
  neural::affine(params_.at(kActW).value.data(), s.stack.empty() ? zero : s.stack.back().h,
                 params_.at(kActB).value.data(), logits);
  neural::softmax(logits, out, legal_mask(s));
}

void SyntacticLM::step(State& s, std::uint32_t a) const {
  if (a >= num_actions()) throw UsageError("action index out of range");
  s.ts.apply(to_action(a));
  const std::size_t d = cfg_.embedding;
  Entry e;
  if (a == 0) {
    std::vector<std::vector<double>> children;
    while (!s.stack.back().open) {
      children.push_back(std::move(s.stack.back().emb));
      s.stack.pop_back();
    }
    std::reverse(children.begin(), children.end());
    const std::vector<double> label = std::move(s.stack.back().emb);
    s.stack.pop_back();
    std::vector<double> hf(d, 0.0), cf(d, 0.0), hb(d, 0.0), cb(d, 0.0);
    const auto& fw = params_.at(kCompFW).value;
    const auto& fb = params_.at(kCompFB).value;
    const auto& bw = params_.at(kCompBW).value;
    const auto& bb = params_.at(kCompBB).value;
    lstm_step(fw, fb, label, hf, cf);
    for (const auto& ch : children) lstm_step(fw, fb, ch, hf, cf);
    lstm_step(bw, bb, label, hb, cb);
    for (auto it = children.rbegin(); it != children.rend(); ++it) lstm_step(bw, bb, *it, hb, cb);
    std::vector<double> both(hf);
    both.insert(both.end(), hb.begin(), hb.end());
    e.emb.resize(d);
    neural::affine(params_.at(kMergeW).value.data(), both, params_.at(kMergeB).value.data(), e.emb);
    for (double& v : e.emb) v = std::tanh(v);
  } else if (a <= nts_.size()) {
    e.open = true;
    e.label = a - 1;
    auto row = params_.at(kNtEmbed).value.row(a - 1);
    e.emb.assign(row.begin(), row.end());
  } else {
    auto row = params_.at(kWordEmbed).value.row(a - 1 - nts_.size());
    e.emb.assign(row.begin(), row.end());
  }
  push_entry(s, std::move(e));
}

double SyntacticLM::oracle_logprob(std::span<const std::uint32_t> actions) const {
  State s = initial_state();
  std::vector<double> p(num_actions());
  double lp = 0.0;
  for (std::uint32_t a : actions) {
    action_dist(s, p);
    lp += std::log(p[a]);
    step(s, a);
  }
  return lp;
}

SyntacticLM SyntacticLM::train(const std::vector<corpus::PhraseTree>& trees,
                               const corpus::Vocabulary& vocab, Direction dir,
                               const neural::TrainConfig& cfg, std::vector<double>* epoch_nll) {
  if (trees.empty()) throw DataError("syntactic LM trained on an empty treebank");
  std::set<std::string> labels;
  for (const auto& t : trees) collect_labels(t, labels);
  SyntacticLM m(vocab.size(), std::vector<std::string>(labels.begin(), labels.end()), cfg, dir);
  std::vector<std::vector<std::uint32_t>> data;
  data.reserve(trees.size());
  for (const auto& t : trees) data.push_back(m.encode_oracle(t, vocab));
  auto hist = neural::train_sgd(m.params_, m.cfg_, data.size(),
                                [&](Graph& g, std::size_t i, Rng&) { return m.build_loss(g, data[i]); });
  if (epoch_nll) {
    double actions = 0.0;
    for (const auto& a : data) actions += static_cast<double>(a.size());
    for (double& h : hist) h *= static_cast<double>(data.size()) / actions;
    *epoch_nll = std::move(hist);
  }
  return m;
}

void SyntacticLM::save(const std::string& path, const std::string& vocab_hash) const {
  neural::CheckpointHeader h;
  h.model_class = "syntactic";
  h.meta = cfg_.to_map();
  h.meta["direction"] = std::string(transitions::direction_name(dir_));
  h.meta["vocab_size"] = std::to_string(vocab_size_);
  h.meta["vocab"] = vocab_hash;
  h.meta["nonterminals"] = join(nts_, " ");
  neural::save_checkpoint(path, h, params_);
}

SyntacticLM SyntacticLM::load(const std::string& path, std::size_t vocab_size,
                              const std::string& vocab_hash) {
  auto header = neural::read_checkpoint_header(path);
  if (header.model_class != "syntactic") {
    throw DataError(path + ": expected a syntactic checkpoint, found " + header.model_class);
  }
  auto meta = header.meta;
  if (meta["vocab"] != vocab_hash) throw DataError(path + ": vocabulary hash mismatch");
  if (parse_int(meta["vocab_size"]) != static_cast<long long>(vocab_size)) {
    throw DataError(path + ": vocabulary size mismatch");
  }
  const Direction dir = transitions::parse_direction(meta["direction"]);
  const auto nts = split_whitespace(meta["nonterminals"]);
  for (const char* k : {"direction", "vocab_size", "vocab", "nonterminals"}) meta.erase(k);
  SyntacticLM m(vocab_size, nts, neural::TrainConfig::from_map(meta), dir);
  neural::load_checkpoint(path, m.params_);
  return m;
}

namespace {

class ForcedCursor : public Cursor {
 public:
  ForcedCursor(const ForcedTreeTeacher* t) : t_(t), state_(t->model().initial_state()) { advance(); }
  std::unique_ptr<Cursor> clone() const override { return std::make_unique<ForcedCursor>(*this); }

  void push(TokenId token) override {
    const auto& sk = t_->skeleton();
    if (pos_ >= sk.size()) throw DataError("forced tree has fewer words than the sequence");
    const auto& m = t_->model();
    if (token >= m.vocab_size()) throw DataError("token id outside vocabulary");
    m.step(state_, static_cast<std::uint32_t>(m.gen_index(token)));
    ++pos_;
    advance();
  }

  void dist(std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    if (pos_ >= t_->skeleton().size()) {
      out[corpus::kEos] = 1.0;
      return;
    }
    const auto& m = t_->model();
    std::vector<double> p(m.num_actions());
    m.action_dist(state_, p);
    double total = 0.0;
    for (std::size_t w = 0; w < m.vocab_size(); ++w) total += p[m.gen_index(static_cast<TokenId>(w))];
    if (!(total > 0.0)) throw NumericalError("no probability mass on GEN actions");
    for (std::size_t w = 0; w < m.vocab_size(); ++w) {
      out[w] = p[m.gen_index(static_cast<TokenId>(w))] / total;
    }
  }

 private:
  // Applies the skeleton's NT/REDUCE actions up to the next GEN slot.
  void advance() {
    const auto& sk = t_->skeleton();
    const auto& m = t_->model();
    while (pos_ < sk.size() && sk[pos_].kind != ActionKind::kGen) {
      const auto idx = sk[pos_].kind == ActionKind::kReduce ? 0 : 1 + m.nt_index(sk[pos_].payload);
      m.step(state_, static_cast<std::uint32_t>(idx));
      ++pos_;
    }
  }

  const ForcedTreeTeacher* t_;
  SyntacticLM::State state_;
  std::size_t pos_ = 0;
};

}  // namespace

ForcedTreeTeacher::ForcedTreeTeacher(const SyntacticLM& model, const corpus::PhraseTree& tree)
    : model_(&model), skeleton_(transitions::oracle(tree, model.direction())) {}

std::unique_ptr<Cursor> ForcedTreeTeacher::start() const { return std::make_unique<ForcedCursor>(this); }

std::vector<double> syntactic_next_word_dist(const SyntacticLM& m, std::span<const TokenId> prefix,
                                             const corpus::PhraseTree& tree, std::size_t i,
                                             const corpus::Vocabulary& vocab) {
  auto yield = corpus::leaves(tree);
  if (m.direction() == Direction::kR2L) std::reverse(yield.begin(), yield.end());
  if (i >= yield.size()) throw DataError("position " + std::to_string(i) + " beyond the forced tree");
  if (prefix.size() < i) throw DataError("prefix shorter than the requested position");
  if (prefix.size() > yield.size()) throw DataError("prefix longer than the forced tree's yield");
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    if (vocab.id(yield[j]) != prefix[j]) {
      throw DataError("forced tree disagrees with the prefix at position " + std::to_string(j));
    }
  }
  ForcedTreeTeacher t(m, tree);
  return t.next_dist(prefix.first(i));
}

}  // namespace sdistill::teachers
