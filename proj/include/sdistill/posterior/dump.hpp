#pragma once

#include <string>
#include <vector>

#include "sdistill/posterior/posterior.hpp"

namespace sdistill::posterior {

inline constexpr int kDumpVersion = 1;

struct DumpRow {
  std::size_t sentence = 0;
  std::size_t position = 0;
  Method method = Method::kExact;
  std::vector<std::pair<TokenId, double>> top;  // (id, log prob), most probable first
};

// The k most probable ids with log probabilities; ties broken by lower id.
std::vector<std::pair<TokenId, double>> top_k_logprobs(const std::vector<double>& dist, std::size_t k);

// "sent_id \t position \t method \t id:logprob ..." after a "# k=.. vocab=.." header.
std::string format_posterior_dump(const std::vector<std::vector<PosteriorEstimate>>& estimates,
                                  std::size_t k, const std::string& vocab_hash);
std::vector<DumpRow> parse_posterior_dump(const std::string& text, const std::string& vocab_hash,
                                          std::size_t* k_out = nullptr);

}  // namespace sdistill::posterior
