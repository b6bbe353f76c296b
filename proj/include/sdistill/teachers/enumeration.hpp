#pragma once

#include <vector>

#include "sdistill/corpus/pcfg.hpp"
#include "sdistill/corpus/tokenizer.hpp"
#include "sdistill/teachers/teacher.hpp"

namespace sdistill::teachers {

struct WeightedSequence {
  std::vector<TokenId> tokens;
  double prob = 0.0;
};

// Exact language model over a finite weighted support (e.g. an enumerated
// PCFG): next-token probabilities are ratios of prefix masses in a trie.
// Pushing a token outside the support throws.
class EnumerationLM : public Teacher {
 public:
  EnumerationLM(std::size_t vocab_size, const std::vector<WeightedSequence>& support,
                Direction dir = Direction::kL2R);

  std::size_t vocab_size() const override { return vocab_size_; }
  Direction direction() const override { return dir_; }
  std::unique_ptr<Cursor> start() const override;

  // Probability of a full sequence (0 outside the support).
  double joint(std::span<const TokenId> tokens) const;

  struct Node {
    double mass = 0.0;
    double end = 0.0;
    std::vector<std::pair<TokenId, std::uint32_t>> children;  // sorted by token
  };
  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  // Child index or -1.
  long child(std::uint32_t node, TokenId t) const;

 private:
  std::size_t vocab_size_;
  Direction dir_;
  std::vector<Node> nodes_;
};

// Tokenizes every enumerated string with `tok` and maps pieces to ids.
std::vector<WeightedSequence> tokenize_support(const std::vector<corpus::WeightedString>& strings,
                                               const corpus::Tokenizer& tok);

}  // namespace sdistill::teachers
