#pragma once

#include "sdistill/corpus/tree.hpp"
#include "sdistill/transitions/action.hpp"
#include "sdistill/transitions/state.hpp"

namespace sdistill::transitions {

// Depth-first, top-down action sequence for a WORD-augmented tree. R2L expands
// children (and subword pieces) right to left.
ActionSequence oracle(const corpus::PhraseTree& tree, Direction dir);

// Inverse of oracle(): rebuilds the tree. R2L sequences build the mirrored tree,
// which is un-mirrored before returning.
corpus::PhraseTree replay(const ActionSequence& actions, Direction dir, const Limits& limits = {});

}  // namespace sdistill::transitions
