#pragma once

#include <string>
#include <vector>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/corpus/vocab.hpp"
#include "sdistill/neural/graph.hpp"
#include "sdistill/neural/sgd.hpp"
#include "sdistill/teachers/teacher.hpp"
#include "sdistill/transitions/state.hpp"

namespace sdistill::teachers {

// Generative transition-based LM over (tree, subword) pairs. The state is a
// stack LSTM over entry embeddings (open nonterminals, generated pieces and
// composed constituents, oldest to newest). REDUCE composes the popped
// children with a bidirectional LSTM over [label, children...] followed by a
// tanh merge. Actions are scored from the top stack state with a softmax
// restricted to legal actions.
//
// Action indices: 0 = REDUCE, 1 + n = NT(nonterminal n), 1 + |N| + w = GEN(w).
class SyntacticLM {
 public:
  struct Entry {
    bool open = false;
    std::uint32_t label = 0;  // nonterminal index of an open marker
    std::vector<double> emb, h, c;
  };
  struct State {
    transitions::TransitionState ts;
    std::vector<Entry> stack;
  };

  SyntacticLM(std::size_t vocab_size, std::vector<std::string> nonterminals,
              const neural::TrainConfig& cfg, Direction dir);

  // Trees are WORD-augmented, in natural orientation; R2L models train on the
  // right-to-left oracle.
  static SyntacticLM train(const std::vector<corpus::PhraseTree>& trees,
                           const corpus::Vocabulary& vocab, Direction dir,
                           const neural::TrainConfig& cfg, std::vector<double>* epoch_nll = nullptr);

  std::size_t vocab_size() const { return vocab_size_; }
  Direction direction() const { return dir_; }
  const std::vector<std::string>& nonterminals() const { return nts_; }
  std::size_t num_actions() const { return 1 + nts_.size() + vocab_size_; }
  std::size_t nt_index(const std::string& label) const;
  std::size_t gen_index(TokenId w) const { return 1 + nts_.size() + w; }

  // Action index sequence of a tree's oracle in this model's direction.
  std::vector<std::uint32_t> encode_oracle(const corpus::PhraseTree& tree,
                                           const corpus::Vocabulary& vocab) const;
  // Summed action NLL of an encoded oracle (epoch_nll reports the per-action mean).
  neural::Var build_loss(neural::Graph& g, std::span<const std::uint32_t> actions);

  State initial_state() const { return {}; }
  std::vector<std::uint8_t> legal_mask(const State& s) const;
  // Distribution over all action indices in state `s` (exact zeros on illegal ones).
  void action_dist(const State& s, std::span<double> out) const;
  void step(State& s, std::uint32_t action) const;
  // Sum of action log probabilities of an encoded oracle.
  double oracle_logprob(std::span<const std::uint32_t> actions) const;

  neural::ParameterSet& params() { return params_; }
  const neural::ParameterSet& params() const { return params_; }
  const neural::TrainConfig& config() const { return cfg_; }

  void save(const std::string& path, const std::string& vocab_hash) const;
  static SyntacticLM load(const std::string& path, std::size_t vocab_size,
                          const std::string& vocab_hash);

 private:
  transitions::Action to_action(std::uint32_t index) const;
  void push_entry(State& s, Entry e) const;

  std::size_t vocab_size_;
  std::vector<std::string> nts_;
  neural::TrainConfig cfg_;
  Direction dir_;
  neural::ParameterSet params_;
  std::vector<std::uint8_t> gen_mask_;
};

// Teacher view of a syntactic LM for one sentence, conditioned on a forced
// tree prefix: the tree's skeleton (NT and REDUCE actions) is replayed around
// the pushed tokens, and at each GEN the next-word distribution is the action
// distribution restricted to GEN actions and renormalized. After the last GEN
// slot the distribution is a point mass on </s>.
class ForcedTreeTeacher : public Teacher {
 public:
  // `tree` is in natural orientation; it is mirrored for R2L models.
  ForcedTreeTeacher(const SyntacticLM& model, const corpus::PhraseTree& tree);

  std::size_t vocab_size() const override { return model_->vocab_size(); }
  Direction direction() const override { return model_->direction(); }
  std::unique_ptr<Cursor> start() const override;

  const std::vector<transitions::Action>& skeleton() const { return skeleton_; }
  const SyntacticLM& model() const { return *model_; }

 private:
  const SyntacticLM* model_;
  std::vector<transitions::Action> skeleton_;
};

// Next-word distribution at position i (in the model's reading order) given
// the prefix and a forced tree whose yield must agree with the prefix.
std::vector<double> syntactic_next_word_dist(const SyntacticLM& m, std::span<const TokenId> prefix,
                                             const corpus::PhraseTree& tree, std::size_t i,
                                             const corpus::Vocabulary& vocab);

}  // namespace sdistill::teachers
