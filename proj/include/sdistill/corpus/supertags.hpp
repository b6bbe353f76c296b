#pragma once

#include <string>
#include <vector>

#include "sdistill/corpus/tokenizer.hpp"
#include "sdistill/corpus/tree.hpp"

namespace sdistill::corpus {

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
};

// Supertag-like labels read off a derivation tree with POS preterminals: each
// word gets the signature "PRETERMINAL^PARENT^GRANDPARENT" (missing ancestors
// omitted), and every subword piece of the word inherits it.
TaggedSentence supertag(const PhraseTree& tree, const Tokenizer& tok, int chain_length = 3);

}  // namespace sdistill::corpus
