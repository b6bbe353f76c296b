#include "sdistill/distill/targets.hpp"

#include <algorithm>

#include "sdistill/posterior/posterior.hpp"
#include "sdistill/util/error.hpp"

namespace sdistill::distill {

std::string_view mode_name(KdMode m) {
  switch (m) {
    case KdMode::kNone: return "none";
    case KdMode::kL2R: return "l2r";
    case KdMode::kR2L: return "r2l";
    case KdMode::kUF: return "uf";
    case KdMode::kUG: return "ug";
    case KdMode::kSeq: return "seq";
  }
  return "?";
}

KdMode parse_mode(std::string_view s) {
  for (KdMode m : {KdMode::kNone, KdMode::kL2R, KdMode::kR2L, KdMode::kUF, KdMode::kUG, KdMode::kSeq}) {
    if (s == mode_name(m)) return m;
  }
  throw UsageError("unknown distillation mode '" + std::string(s) + "'");
}

SparseDist truncate_top_k(std::span<const double> dist, std::size_t k) {
  SparseDist out;
  for (std::size_t w = 0; w < dist.size(); ++w) {
    if (dist[w] > 0.0) out.emplace_back(static_cast<TokenId>(w), dist[w]);
  }
  if (out.size() <= k) return out;
  std::partial_sort(out.begin(), out.begin() + static_cast<long>(k), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  out.resize(k);
  std::sort(out.begin(), out.end());
  double total = 0.0;
  for (const auto& e : out) total += e.second;
  for (auto& e : out) e.second /= total;
  return out;
}

std::vector<double> densify(const SparseDist& d, std::size_t vocab_size) {
  std::vector<double> out(vocab_size, 0.0);
  for (const auto& [id, p] : d) out.at(id) = p;
  return out;
}

std::vector<KDTarget> build_targets(KdMode mode, const TeacherBundle& t,
                                    std::span<const TokenId> clean,
                                    std::span<const std::size_t> positions,
                                    const corpus::PhraseTree* tree, std::size_t top_k) {
  std::vector<KDTarget> out;
  if (mode == KdMode::kNone) {
    for (std::size_t i : positions) {
      if (i >= clean.size()) throw UsageError("position outside the sequence");
      out.push_back({i, clean[i], {{clean[i], 1.0}}});
    }
    return out;
  }
  using posterior::Method;
  Method method = Method::kUG;
  switch (mode) {
    case KdMode::kL2R: method = Method::kL2R; break;
    case KdMode::kR2L: method = Method::kR2L; break;
    case KdMode::kUF: method = Method::kUF; break;
    default: break;
  }
  const bool need_fwd = mode != KdMode::kR2L;
  const bool need_rev = mode != KdMode::kL2R;
  if ((need_fwd && !t.fwd) || (need_rev && !t.rev)) {
    throw UsageError("mode " + std::string(mode_name(mode)) + " is missing a teacher");
  }
  if (method == Method::kUG && !t.q) throw UsageError("mode " + std::string(mode_name(mode)) + " needs a unigram model");
  if (mode == KdMode::kSeq && ((t.fwd && t.fwd->needs_tree()) || (t.rev && t.rev->needs_tree()))) {
    throw UsageError("mode seq expects sequential teachers");
  }
  std::vector<posterior::PosteriorEstimate> est;
  const Method methods[] = {method};
  if (mode == KdMode::kR2L) {
    // Only the reverse teacher is involved; run it as the sole expert.
    auto r = t.rev->bind(tree);
    const auto rev_seq = teachers::reversed(clean);
    const auto rd = r->all_next_dists(rev_seq);
    for (std::size_t i : positions) {
      if (i >= clean.size()) throw UsageError("position outside the sequence");
      est.push_back({i, Method::kR2L, posterior::restrict_to_sigma(rd[clean.size() - 1 - i])});
    }
  } else {
    auto f = t.fwd->bind(tree);
    std::shared_ptr<const teachers::Teacher> r = need_rev ? t.rev->bind(tree) : nullptr;
    est = posterior::sentence_posteriors(methods, *f, r.get(), t.q, clean, positions);
  }
  for (const auto& e : est) out.push_back({e.position, clean[e.position], truncate_top_k(e.dist, top_k)});
  return out;
}

}  // namespace sdistill::distill
