#include "sdistill/teachers/teacher.hpp"

#include <cmath>

#include "sdistill/util/error.hpp"

namespace sdistill::teachers {

std::vector<std::uint8_t> output_mask(std::size_t vocab_size) {
  std::vector<std::uint8_t> m(vocab_size, 0);
  for (std::size_t i = corpus::kNumReserved; i < vocab_size; ++i) m[i] = 1;
  if (vocab_size > corpus::kUnk) m[corpus::kUnk] = 1;
  if (vocab_size > corpus::kEos) m[corpus::kEos] = 1;
  return m;
}

std::vector<double> Teacher::next_dist(std::span<const TokenId> history) const {
  auto c = start();
  for (TokenId t : history) c->push(t);
  std::vector<double> out(vocab_size());
  c->dist(out);
  return out;
}

std::vector<std::vector<double>> Teacher::all_next_dists(std::span<const TokenId> seq) const {
  std::vector<std::vector<double>> out(seq.size() + 1, std::vector<double>(vocab_size()));
  auto c = start();
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    c->dist(out[i]);
    if (i < seq.size()) c->push(seq[i]);
  }
  return out;
}

double sequence_logprob(const Teacher& t, std::span<const TokenId> tokens) {
  const auto dists = t.all_next_dists(tokens);
  double lp = 0.0;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const TokenId w = i < tokens.size() ? tokens[i] : corpus::kEos;
    if (w >= t.vocab_size()) throw DataError("token id " + std::to_string(w) + " outside vocabulary");
    const double p = dists[i][w];
    if (!(p > 0.0)) {
      throw NumericalError("token id " + std::to_string(w) + " at position " + std::to_string(i) +
                           " has zero probability");
    }
    lp += std::log(p);
  }
  return lp;
}

PerplexityResult perplexity(const Teacher& t, const std::vector<std::vector<TokenId>>& corpus) {
  PerplexityResult r;
  double total = 0.0;
  for (const auto& s : corpus) {
    total -= sequence_logprob(t, s);
    r.tokens += s.size() + 1;
  }
  if (r.tokens == 0) throw DataError("perplexity of an empty corpus");
  r.nll = total / static_cast<double>(r.tokens);
  r.perplexity = std::exp(r.nll);
  return r;
}

std::vector<TokenId> reversed(std::span<const TokenId> seq) {
  return std::vector<TokenId>(seq.rbegin(), seq.rend());
}

}  // namespace sdistill::teachers
