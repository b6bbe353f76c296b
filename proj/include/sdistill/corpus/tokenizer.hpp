#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/corpus/vocab.hpp"

namespace sdistill::corpus {

// Greedy longest-match subword tokenizer over a fixed vocabulary.
class Tokenizer {
 public:
  explicit Tokenizer(const Vocabulary& vocab, std::size_t max_piece_bytes = 100)
      : vocab_(&vocab), max_piece_bytes_(max_piece_bytes) {}

  const Vocabulary& vocabulary() const { return *vocab_; }
  std::size_t max_piece_bytes() const { return max_piece_bytes_; }

  // First piece is unprefixed, continuations carry "##". Falls back to a
  // single "<unk>" when the word cannot be covered.
  std::vector<std::string> tokenize_word(std::string_view word) const;

 private:
  const Vocabulary* vocab_;
  std::size_t max_piece_bytes_;
};

inline std::vector<std::string> tokenize_word(std::string_view word, const Tokenizer& tok) {
  return tok.tokenize_word(word);
}

// Drops POS preterminals and wraps every word's pieces in a WORD node.
// Already-augmented trees are returned unchanged.
PhraseTree subwordify(const PhraseTree& tree, const Tokenizer& tok);

}  // namespace sdistill::corpus
