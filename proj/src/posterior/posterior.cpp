#include "sdistill/posterior/posterior.hpp"

#include <cmath>
#include <limits>

#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::posterior {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::uint8_t> sigma_mask(std::size_t v) {
  std::vector<std::uint8_t> m(v, 0);
  for (std::size_t w = corpus::kNumReserved; w < v; ++w) m[w] = 1;
  return m;
}

// exp(logits - logsumexp) over the non-reserved ids, zero elsewhere.
std::vector<double> normalize_logs(const std::vector<double>& logp, const char* what) {
  const auto mask = sigma_mask(logp.size());
  const double z = neural::logsumexp(logp, mask);
  if (z == kNegInf) throw NumericalError(std::string(what) + ": every candidate has probability zero");
  std::vector<double> out(logp.size(), 0.0);
  for (std::size_t w = corpus::kNumReserved; w < logp.size(); ++w) out[w] = std::exp(logp[w] - z);
  return out;
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kExact: return "exact";
    case Method::kUF: return "uf";
    case Method::kUG: return "ug";
    case Method::kMoE: return "moe";
    case Method::kL2R: return "l2r";
    case Method::kR2L: return "r2l";
  }
  return "?";
}

std::string_view method_report_name(Method m) {
  switch (m) {
    case Method::kExact: return "Exact";
    case Method::kUF: return "Uniform";
    case Method::kUG: return "Unigram";
    case Method::kMoE: return "MoE";
    case Method::kL2R: return "L2R";
    case Method::kR2L: return "R2L";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::kExact, Method::kUF, Method::kUG, Method::kMoE, Method::kL2R, Method::kR2L}) {
    if (s == method_name(m) || s == method_report_name(m)) return m;
  }
  throw UsageError("unknown posterior method '" + std::string(s) + "'");
}

PosteriorEstimate exact_posterior(const Teacher& fwd, std::span<const TokenId> tokens, std::size_t i,
                                  const ExactOptions& opts) {
  if (fwd.direction() != teachers::Direction::kL2R) {
    throw UsageError("exact posterior needs a left-to-right teacher");
  }
  if (i >= tokens.size()) throw UsageError("position outside the sequence");
  const std::size_t v = fwd.vocab_size();
  auto prefix = fwd.start();
  for (std::size_t j = 0; j < i; ++j) prefix->push(tokens[j]);
  std::vector<double> first(v);
  prefix->dist(first);

  std::vector<double> logp(v, kNegInf);
  const std::size_t candidates = v - corpus::kNumReserved;
  parallel_for(candidates, opts.jobs, [&](std::size_t k) {
    const TokenId w = static_cast<TokenId>(corpus::kNumReserved + k);
    double lp = safe_log(first[w]);
    if (lp == kNegInf) return;
    auto c = prefix->clone();
    c->push(w);
    std::vector<double> d(v);
    for (std::size_t j = i + 1; j < tokens.size() && lp != kNegInf; ++j) {
      c->dist(d);
      lp += safe_log(d[tokens[j]]);
      if (lp != kNegInf) c->push(tokens[j]);
    }
    if (opts.score_terminator && lp != kNegInf) {
      c->dist(d);
      lp += safe_log(d[corpus::kEos]);
    }
    logp[w] = lp;
  });
  return {i, Method::kExact, normalize_logs(logp, "exact posterior")};
}

std::vector<double> restrict_to_sigma(std::span<const double> dist) {
  std::vector<double> out(dist.size(), 0.0);
  double total = 0.0;
  for (std::size_t w = corpus::kNumReserved; w < dist.size(); ++w) total += dist[w];
  if (!(total > 0.0)) throw NumericalError("no probability mass on the non-reserved vocabulary");
  for (std::size_t w = corpus::kNumReserved; w < dist.size(); ++w) out[w] = dist[w] / total;
  return out;
}

std::vector<double> combine_product(std::span<const double> fwd, std::span<const double> rev,
                                    const std::vector<double>* q) {
  if (fwd.size() != rev.size() || (q && q->size() != fwd.size())) {
    throw UsageError("teachers disagree on the vocabulary size");
  }
  std::vector<double> logp(fwd.size(), kNegInf);
  for (std::size_t w = corpus::kNumReserved; w < fwd.size(); ++w) {
    double lp = safe_log(fwd[w]) + safe_log(rev[w]);
    if (q && lp != kNegInf) {
      if (!((*q)[w] > 0.0)) {
        throw NumericalError("prior q is zero at token id " + std::to_string(w) +
                             " where both experts are positive");
      }
      lp -= std::log((*q)[w]);
    }
    logp[w] = lp;
  }
  return normalize_logs(logp, "approximate posterior");
}

std::vector<double> combine_mixture(std::span<const double> fwd, std::span<const double> rev) {
  if (fwd.size() != rev.size()) throw UsageError("teachers disagree on the vocabulary size");
  auto f = restrict_to_sigma(fwd);
  const auto r = restrict_to_sigma(rev);
  for (std::size_t w = 0; w < f.size(); ++w) f[w] = 0.5 * f[w] + 0.5 * r[w];
  return f;
}

PosteriorEstimate approx_posterior(const Teacher& fwd, const Teacher& rev,
                                   const teachers::UnigramModel* q, std::span<const TokenId> tokens,
                                   std::size_t i) {
  if (i >= tokens.size()) throw UsageError("position outside the sequence");
  const auto f = fwd.next_dist(tokens.first(i));
  const auto r = rev.next_dist(teachers::reversed(tokens.subspan(i + 1)));
  return {i, q ? Method::kUG : Method::kUF, combine_product(f, r, q ? &q->q_dist() : nullptr)};
}

PosteriorEstimate moe_posterior(const Teacher& fwd, const Teacher& rev,
                                std::span<const TokenId> tokens, std::size_t i) {
  if (i >= tokens.size()) throw UsageError("position outside the sequence");
  const auto f = fwd.next_dist(tokens.first(i));
  const auto r = rev.next_dist(teachers::reversed(tokens.subspan(i + 1)));
  return {i, Method::kMoE, combine_mixture(f, r)};
}

std::vector<PosteriorEstimate> sentence_posteriors(std::span<const Method> methods,
                                                   const Teacher& fwd, const Teacher* rev,
                                                   const teachers::UnigramModel* q,
                                                   std::span<const TokenId> tokens,
                                                   std::span<const std::size_t> positions,
                                                   const ExactOptions& opts) {
  bool need_rev = false;
  for (Method m : methods) {
    if (m == Method::kUF || m == Method::kUG || m == Method::kMoE || m == Method::kR2L) need_rev = true;
    if (m == Method::kUG && !q) throw UsageError("unigram-prior posterior needs a unigram model");
  }
  if (need_rev && !rev) throw UsageError("method needs a right-to-left teacher");
  if (rev && rev->direction() != teachers::Direction::kR2L) {
    throw UsageError("reverse teacher must be right-to-left");
  }
  if (fwd.direction() != teachers::Direction::kL2R) throw UsageError("forward teacher must be left-to-right");
  const std::size_t n = tokens.size();
  const auto fd = fwd.all_next_dists(tokens);
  std::vector<std::vector<double>> rd;
  if (need_rev) rd = rev->all_next_dists(teachers::reversed(tokens));
  std::vector<PosteriorEstimate> out;
  for (std::size_t i : positions) {
    if (i >= n) throw UsageError("position outside the sequence");
    for (Method m : methods) {
      PosteriorEstimate e{i, m, {}};
      switch (m) {
        case Method::kExact: e = exact_posterior(fwd, tokens, i, opts); break;
        case Method::kUF: e.dist = combine_product(fd[i], rd[n - 1 - i], nullptr); break;
        case Method::kUG: e.dist = combine_product(fd[i], rd[n - 1 - i], &q->q_dist()); break;
        case Method::kMoE: e.dist = combine_mixture(fd[i], rd[n - 1 - i]); break;
        case Method::kL2R: e.dist = restrict_to_sigma(fd[i]); break;
        case Method::kR2L: e.dist = restrict_to_sigma(rd[n - 1 - i]); break;
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<std::vector<PosteriorEstimate>> corpus_posteriors(std::span<const Method> methods,
                                                              const ReportInput& in) {
  if (!in.fwd || !in.corpus) throw UsageError("posterior computation needs a forward teacher and a corpus");
  const auto& corpus = *in.corpus;
  if (in.positions && in.positions->size() != corpus.size()) {
    throw UsageError("position lists do not match the corpus");
  }
  const bool trees_needed = in.fwd->needs_tree() || (in.rev && in.rev->needs_tree());
  if (trees_needed && (!in.trees || in.trees->size() != corpus.size())) {
    throw UsageError("syntactic teachers need one tree per sentence");
  }
  std::vector<std::vector<PosteriorEstimate>> out(corpus.size());
  ExactOptions opts;
  parallel_for(corpus.size(), in.jobs, [&](std::size_t s) {
    const corpus::PhraseTree* tree = in.trees && trees_needed ? &(*in.trees)[s] : nullptr;
    auto f = in.fwd->bind(tree);
    std::shared_ptr<const Teacher> r = in.rev ? in.rev->bind(tree) : nullptr;
    std::vector<std::size_t> all;
    if (!in.positions) {
      all.resize(corpus[s].size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    }
    const auto& pos = in.positions ? (*in.positions)[s] : all;
    out[s] = sentence_posteriors(methods, *f, r.get(), in.q, corpus[s], pos, opts);
  });
  return out;
}

PosteriorReport posterior_report(std::span<const Method> methods, const ReportInput& in) {
  const auto all = corpus_posteriors(methods, in);
  PosteriorReport rep;
  for (Method m : methods) rep.rows.push_back({m, 0.0, 0.0, 0});
  for (std::size_t s = 0; s < all.size(); ++s) {
    for (const auto& e : all[s]) {
      const TokenId truth = (*in.corpus)[s][e.position];
      const double p = e.dist.at(truth);
      if (!(p > 0.0)) {
        throw NumericalError(std::string(method_name(e.method)) + " posterior gives the true token zero probability");
      }
      for (auto& row : rep.rows) {
        if (row.method == e.method) {
          row.nll -= std::log(p);
          ++row.count;
        }
      }
    }
  }
  for (auto& row : rep.rows) {
    if (row.count == 0) throw DataError("posterior report over an empty position set");
    row.nll /= static_cast<double>(row.count);
    row.perplexity = std::exp(row.nll);
  }
  return rep;
}

std::string PosteriorReport::to_tsv() const {
  std::string out = "method\tnll\tperplexity\tcount\n";
  for (const auto& r : rows) {
    out += std::string(method_report_name(r.method)) + "\t" + format_double(r.nll) + "\t" +
           format_double(r.perplexity) + "\t" + std::to_string(r.count) + "\n";
  }
  return out;
}

}  // namespace sdistill::posterior
