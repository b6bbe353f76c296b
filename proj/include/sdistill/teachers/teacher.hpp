#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sdistill/corpus/vocab.hpp"
#include "sdistill/transitions/action.hpp"

namespace sdistill::teachers {

using corpus::TokenId;
using transitions::Direction;

// Ids a language model may predict: <unk>, </s> and every non-reserved token.
std::vector<std::uint8_t> output_mask(std::size_t vocab_size);

// Incremental scoring state over one history. push() extends the history by
// one token; dist() is the next-token distribution after the current history.
class Cursor {
 public:
  virtual ~Cursor() = default;
  virtual std::unique_ptr<Cursor> clone() const = 0;
  virtual void push(TokenId token) = 0;
  virtual void dist(std::span<double> out) const = 0;
};

// Autoregressive model over token ids. Histories are given in the model's own
// reading order: a right-to-left teacher is fed the tokens after position i
// from right to left. The <s> context is implicit.
class Teacher {
 public:
  virtual ~Teacher() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual Direction direction() const = 0;
  virtual std::unique_ptr<Cursor> start() const = 0;

  std::vector<double> next_dist(std::span<const TokenId> history) const;
  // Next-token distributions after every prefix of `seq` (seq.size() + 1 of them;
  // the last one scores </s>).
  virtual std::vector<std::vector<double>> all_next_dists(std::span<const TokenId> seq) const;
};

// Sum of log next-token probabilities of `tokens` followed by </s>. Throws
// NumericalError if some token has probability zero.
double sequence_logprob(const Teacher& t, std::span<const TokenId> tokens);

struct PerplexityResult {
  double nll = 0.0;  // mean per-token negative log likelihood (</s> included)
  double perplexity = 0.0;
  std::size_t tokens = 0;
};
PerplexityResult perplexity(const Teacher& t, const std::vector<std::vector<TokenId>>& corpus);

std::vector<TokenId> reversed(std::span<const TokenId> seq);

}  // namespace sdistill::teachers
