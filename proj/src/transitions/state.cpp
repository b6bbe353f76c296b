#include "sdistill/transitions/state.hpp"

namespace sdistill::transitions {

LegalSet legal_actions(const TransitionState& state, const Limits& limits) {
  LegalSet legal;
  if (state.terminated()) return legal;
  const bool empty = state.stack().empty();
  const bool has_open = state.open_count() > 0;
  const bool words_left = state.generated() < limits.max_generated;
  // A new nonterminal needs at least one word beneath it, and a second root
  // cannot be opened once the first one is complete.
  legal.nt = (empty || has_open) && state.open_count() < limits.max_open && words_left;
  legal.gen = has_open && words_left;
  legal.reduce = has_open && !state.last_was_nt();
  if (legal.reduce && state.open_count() == 1 && state.generated() == 0) legal.reduce = false;
  return legal;
}

void TransitionState::apply(const Action& a, const Limits& limits) {
  if (terminated_) throw TransitionError(steps_, "action " + a.to_string() + " after termination");
  const LegalSet legal = legal_actions(*this, limits);
  if (!legal.allows(a.kind)) {
    std::string why;
    if (a.kind == ActionKind::kReduce) {
      why = open_count_ == 0 ? "REDUCE with no open nonterminal"
                             : last_was_nt_ ? "REDUCE on empty constituent" : "REDUCE not allowed";
    } else if (a.kind == ActionKind::kGen) {
      why = open_count_ == 0 ? "GEN with no open nonterminal" : "GEN beyond the word limit";
    } else {
      why = open_count_ >= limits.max_open ? "NT at depth cap" : "NT not allowed";
    }
    throw TransitionError(steps_, "illegal " + a.to_string() + ": " + why + " [stack: " +
                                      summary() + "]");
  }
  if ((a.kind == ActionKind::kNT || a.kind == ActionKind::kGen) && a.payload.empty()) {
    throw TransitionError(steps_, "empty payload in " + a.to_string());
  }
  switch (a.kind) {
    case ActionKind::kNT:
      stack_.push_back(Entry{true, corpus::PhraseTree{a.payload, {}}});
      ++open_count_;
      break;
    case ActionKind::kGen:
      stack_.push_back(Entry{false, corpus::PhraseTree::leaf(a.payload)});
      ++generated_;
      break;
    case ActionKind::kReduce: {
      std::size_t k = stack_.size();
      while (!stack_[k - 1].open) --k;
      std::vector<corpus::PhraseTree> kids;
      kids.reserve(stack_.size() - k);
      for (std::size_t j = k; j < stack_.size(); ++j) kids.push_back(std::move(stack_[j].tree));
      stack_.resize(k);
      Entry& marker = stack_.back();
      marker.open = false;
      marker.tree.children = std::move(kids);
      --open_count_;
      if (open_count_ == 0 && stack_.size() == 1) terminated_ = true;
      break;
    }
  }
  last_was_nt_ = a.kind == ActionKind::kNT;
  ++steps_;
}

std::string TransitionState::summary() const {
  std::string out;
  for (std::size_t i = 0; i < stack_.size(); ++i) {
    if (i) out += " | ";
    if (stack_[i].open) {
      out += "(" + stack_[i].tree.label;
    } else {
      out += corpus::render_bracketed(stack_[i].tree);
    }
  }
  return out;
}

const corpus::PhraseTree& TransitionState::result() const {
  if (!terminated_) throw TransitionError(steps_, "incomplete action sequence");
  return stack_.front().tree;
}

TransitionState apply(TransitionState state, const Action& a, const Limits& limits) {
  state.apply(a, limits);
  return state;
}

}  // namespace sdistill::transitions
