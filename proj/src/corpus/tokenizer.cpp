#include "sdistill/corpus/tokenizer.hpp"

#include "sdistill/util/error.hpp"

namespace sdistill::corpus {
namespace {

bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

PhraseTree word_node(const std::string& word, const Tokenizer& tok) {
  auto pieces = tok.tokenize_word(word);
  if (pieces.empty()) throw DataError("word '" + word + "' tokenizes to an empty sequence");
  std::vector<PhraseTree> kids;
  kids.reserve(pieces.size());
  for (auto& p : pieces) kids.push_back(PhraseTree::leaf(std::move(p)));
  return PhraseTree::node(std::string(kWordLabel), std::move(kids));
}

PhraseTree convert(const PhraseTree& node, const Tokenizer& tok) {
  if (node.label == kWordLabel) return node;
  std::vector<PhraseTree> kids;
  kids.reserve(node.children.size());
  for (const auto& child : node.children) {
    if (child.is_leaf()) {
      kids.push_back(word_node(child.label, tok));
    } else if (child.is_preterminal() && child.label != kWordLabel) {
      kids.push_back(word_node(child.children.front().label, tok));
    } else {
      kids.push_back(convert(child, tok));
    }
  }
  return PhraseTree::node(node.label, std::move(kids));
}

}  // namespace

std::vector<std::string> Tokenizer::tokenize_word(std::string_view word) const {
  std::vector<std::string> pieces;
  if (word.empty()) return pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = std::min(word.size(), start + max_piece_bytes_);
    std::string match;
    for (; end > start; --end) {
      if (end < word.size() && is_utf8_continuation(static_cast<unsigned char>(word[end]))) {
        continue;
      }
      std::string candidate = start == 0 ? std::string(word.substr(start, end - start))
                                         : std::string(kContinuationPrefix) +
                                               std::string(word.substr(start, end - start));
      if (vocab_->find(candidate)) {
        match = std::move(candidate);
        break;
      }
    }
    if (match.empty()) return {vocab_->token(kUnk)};
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

PhraseTree subwordify(const PhraseTree& tree, const Tokenizer& tok) {
  if (tree.is_leaf()) throw DataError("subwordify: tree root is a bare terminal");
  // A preterminal root keeps its label and gains a WORD child.
  if (tree.is_preterminal() && tree.label != kWordLabel) {
    return PhraseTree::node(tree.label, {word_node(tree.children.front().label, tok)});
  }
  return convert(tree, tok);
}

}  // namespace sdistill::corpus
