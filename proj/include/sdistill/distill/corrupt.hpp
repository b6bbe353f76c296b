#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdistill/corpus/vocab.hpp"

namespace sdistill::distill {

using corpus::TokenId;

struct CorruptionConfig {
  double rate = 0.15;
  double mask_share = 0.8;
  double random_share = 0.1;
  double keep_share = 0.1;
  void validate() const;
};

struct CorruptionRecord {
  std::vector<TokenId> original;
  std::vector<TokenId> corrupted;
  std::vector<std::size_t> masked;  // selected positions, ascending
  friend bool operator==(const CorruptionRecord&, const CorruptionRecord&) = default;
};

// Each position is selected independently with probability `rate`; a selected
// token becomes <mask>, a uniformly drawn non-reserved token, or stays, with
// the configured shares.
CorruptionRecord corrupt(std::span<const TokenId> tokens, std::size_t vocab_size, std::uint64_t seed,
                         const CorruptionConfig& cfg = {});

inline constexpr int kMaskFormatVersion = 1;

// One masking of corpus sentence `sentence`.
struct MaskedSentence {
  std::size_t sentence = 0;
  CorruptionRecord record;
  friend bool operator==(const MaskedSentence&, const MaskedSentence&) = default;
};

// `dupe` maskings per sentence; masking d of sentence s uses
// derive_seed(seed, "corrupt", d * corpus.size() + s). Output is ordered by
// masking round, then sentence.
std::vector<MaskedSentence> corrupt_corpus(const std::vector<std::vector<TokenId>>& corpus,
                                           std::size_t vocab_size, std::uint64_t seed, std::size_t dupe,
                                           const CorruptionConfig& cfg = {});

// Header "# sdistill-masks <version> vocab=..", then per line:
// sentence \t ids \t corrupted ids \t masked positions.
std::string format_mask_file(const std::vector<MaskedSentence>& masks, const std::string& vocab_hash);
std::vector<MaskedSentence> parse_mask_file(const std::string& text, const std::string& expected_vocab_hash);

}  // namespace sdistill::distill
