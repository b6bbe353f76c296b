#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/transitions/action.hpp"

namespace sdistill::transitions {

struct Limits {
  std::size_t max_open = 64;  // open nonterminals allowed at once
  std::size_t max_generated = std::numeric_limits<std::size_t>::max();
};

struct LegalSet {
  bool nt = false;
  bool gen = false;
  bool reduce = false;

  bool allows(ActionKind k) const {
    return k == ActionKind::kNT ? nt : k == ActionKind::kGen ? gen : reduce;
  }
  friend bool operator==(const LegalSet&, const LegalSet&) = default;
};

class TransitionError : public std::runtime_error {
 public:
  TransitionError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Stack machine of the top-down generative transition system.
class TransitionState {
 public:
  struct Entry {
    bool open = false;        // open nonterminal marker
    corpus::PhraseTree tree;  // marker: label only; otherwise a leaf or completed subtree
  };

  const std::vector<Entry>& stack() const { return stack_; }
  std::size_t generated() const { return generated_; }
  std::size_t open_count() const { return open_count_; }
  bool terminated() const { return terminated_; }
  bool last_was_nt() const { return last_was_nt_; }
  std::size_t steps() const { return steps_; }

  // Applies in place; throws TransitionError if `a` is not legal.
  void apply(const Action& a, const Limits& limits = {});
  // "(S | (NP | (WORD | The" style rendering used in error messages.
  std::string summary() const;
  // The finished tree; requires terminated().
  const corpus::PhraseTree& result() const;

 private:
  std::vector<Entry> stack_;
  std::size_t generated_ = 0;
  std::size_t open_count_ = 0;
  std::size_t steps_ = 0;
  bool terminated_ = false;
  bool last_was_nt_ = false;
};

LegalSet legal_actions(const TransitionState& state, const Limits& limits = {});
TransitionState apply(TransitionState state, const Action& a, const Limits& limits = {});

}  // namespace sdistill::transitions
