#include "sdistill/corpus/supertags.hpp"

#include "sdistill/util/error.hpp"

namespace sdistill::corpus {
namespace {

void walk(const PhraseTree& node, std::vector<const std::string*>& chain, const Tokenizer& tok,
          int chain_length, TaggedSentence& out) {
  chain.push_back(&node.label);
  for (const auto& child : node.children) {
    if (!child.is_leaf()) {
      walk(child, chain, tok, chain_length, out);
      continue;
    }
    std::string label;
    const int n = static_cast<int>(chain.size());
    for (int k = 0; k < chain_length && k < n; ++k) {
      if (k) label += '^';
      label += *chain[static_cast<std::size_t>(n - 1 - k)];
    }
    for (auto& piece : tok.tokenize_word(child.label)) {
      out.tokens.push_back(std::move(piece));
      out.labels.push_back(label);
    }
  }
  chain.pop_back();
}

}  // namespace

TaggedSentence supertag(const PhraseTree& tree, const Tokenizer& tok, int chain_length) {
  if (chain_length < 1) throw UsageError("supertag chain length must be >= 1");
  TaggedSentence out;
  std::vector<const std::string*> chain;
  walk(tree, chain, tok, chain_length, out);
  return out;
}

}  // namespace sdistill::corpus
