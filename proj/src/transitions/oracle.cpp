#include "sdistill/transitions/oracle.hpp"

#include "sdistill/util/error.hpp"

namespace sdistill::transitions {
namespace {

void emit(const corpus::PhraseTree& node, Direction dir, ActionSequence& out) {
  if (node.is_leaf()) {
    out.push_back(Action::gen(node.label));
    return;
  }
  out.push_back(Action::nt(node.label));
  if (dir == Direction::kL2R) {
    for (const auto& child : node.children) emit(child, dir, out);
  } else {
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) emit(*it, dir, out);
  }
  out.push_back(Action::reduce());
}

}  // namespace

ActionSequence oracle(const corpus::PhraseTree& tree, Direction dir) {
  if (!corpus::is_valid(tree, /*augmented=*/false)) {
    throw DataError("oracle: malformed tree " + corpus::render_bracketed(tree));
  }
  ActionSequence out;
  out.reserve(2 * corpus::count_internal(tree) + corpus::count_leaves(tree));
  emit(tree, dir, out);
  return out;
}

corpus::PhraseTree replay(const ActionSequence& actions, Direction dir, const Limits& limits) {
  TransitionState state;
  for (const auto& a : actions) state.apply(a, limits);
  if (!state.terminated()) {
    throw TransitionError(actions.size(), "incomplete action sequence [stack: " + state.summary() + "]");
  }
  return dir == Direction::kL2R ? state.result() : corpus::mirror(state.result());
}

}  // namespace sdistill::transitions
