#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/teachers/registry.hpp"
#include "sdistill/teachers/teacher.hpp"
#include "sdistill/teachers/unigram.hpp"

namespace sdistill::posterior {

using corpus::TokenId;
using teachers::Teacher;

enum class Method { kExact, kUF, kUG, kMoE, kL2R, kR2L };
std::string_view method_name(Method m);         // "exact", "uf", ...
std::string_view method_report_name(Method m);  // "Exact", "Uniform", ...
Method parse_method(std::string_view s);

// Normalized distribution over the non-reserved vocabulary at one position.
struct PosteriorEstimate {
  std::size_t position = 0;
  Method method = Method::kExact;
  std::vector<double> dist;
};

struct ExactOptions {
  // Multiply in the </s> factor after the last token, which makes the result
  // the conditional of the joint sequence probability. Without it the last
  // position reduces to the teacher's next-token distribution.
  bool score_terminator = true;
  int jobs = 1;
};

// Brute-force posterior: for every candidate w, t(w | x_<i) times the teacher's
// probability of the unchanged suffix after substituting w, in log space.
PosteriorEstimate exact_posterior(const Teacher& fwd, std::span<const TokenId> tokens, std::size_t i,
                                  const ExactOptions& opts = {});

// Restriction of a next-token distribution to the non-reserved ids, renormalized.
std::vector<double> restrict_to_sigma(std::span<const double> dist);

// dist(w) ∝ fwd(w) rev(w) / q(w) over the non-reserved ids; q == nullptr is
// the uniform prior (plain product of experts).
std::vector<double> combine_product(std::span<const double> fwd, std::span<const double> rev,
                                    const std::vector<double>* q);
// 0.5 fwd + 0.5 rev, each first restricted to the non-reserved ids.
std::vector<double> combine_mixture(std::span<const double> fwd, std::span<const double> rev);

PosteriorEstimate approx_posterior(const Teacher& fwd, const Teacher& rev,
                                   const teachers::UnigramModel* q, std::span<const TokenId> tokens,
                                   std::size_t i);
PosteriorEstimate moe_posterior(const Teacher& fwd, const Teacher& rev,
                                std::span<const TokenId> tokens, std::size_t i);

// All requested methods at the given positions of one sentence, computing each
// teacher's left/right conditionals once. `q` is required for UG.
std::vector<PosteriorEstimate> sentence_posteriors(std::span<const Method> methods,
                                                   const Teacher& fwd, const Teacher* rev,
                                                   const teachers::UnigramModel* q,
                                                   std::span<const TokenId> tokens,
                                                   std::span<const std::size_t> positions,
                                                   const ExactOptions& opts = {});

struct ReportRow {
  Method method;
  double nll = 0.0;
  double perplexity = 0.0;
  std::size_t count = 0;
};

struct PosteriorReport {
  std::vector<ReportRow> rows;
  std::string to_tsv() const;
};

struct ReportInput {
  const teachers::AnyTeacher* fwd = nullptr;
  const teachers::AnyTeacher* rev = nullptr;
  const teachers::UnigramModel* q = nullptr;
  const std::vector<std::vector<TokenId>>* corpus = nullptr;
  const std::vector<corpus::PhraseTree>* trees = nullptr;  // for syntactic teachers
  // Positions per sentence; all positions when null.
  const std::vector<std::vector<std::size_t>>* positions = nullptr;
  int jobs = 1;
};

// Average negative log posterior of the true token per method.
PosteriorReport posterior_report(std::span<const Method> methods, const ReportInput& in);

// Per-sentence estimates for a corpus, in sentence order; parallel across sentences.
std::vector<std::vector<PosteriorEstimate>> corpus_posteriors(std::span<const Method> methods,
                                                              const ReportInput& in);

}  // namespace sdistill::posterior
