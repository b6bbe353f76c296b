#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/corpus/vocab.hpp"
#include "sdistill/teachers/registry.hpp"
#include "sdistill/teachers/unigram.hpp"

namespace sdistill::distill {

using corpus::TokenId;

// none: one-hot truth (plain masked LM); l2r / r2l: one directional teacher;
// uf / ug: product of both directions under a uniform / unigram prior;
// seq: the unigram-prior product with sequential (recurrent) teachers.
enum class KdMode { kNone, kL2R, kR2L, kUF, kUG, kSeq };
std::string_view mode_name(KdMode m);
KdMode parse_mode(std::string_view s);

using SparseDist = std::vector<std::pair<TokenId, double>>;  // ascending ids

struct KDTarget {
  std::size_t position = 0;
  TokenId truth = 0;
  SparseDist dist;
  friend bool operator==(const KDTarget&, const KDTarget&) = default;
};

struct TeacherBundle {
  const teachers::AnyTeacher* fwd = nullptr;
  const teachers::AnyTeacher* rev = nullptr;
  const teachers::UnigramModel* q = nullptr;
};

// Keeps the k most probable entries (ties to the lower id) and renormalizes;
// a distribution with at most k nonzero entries is returned unchanged.
SparseDist truncate_top_k(std::span<const double> dist, std::size_t k);
std::vector<double> densify(const SparseDist& d, std::size_t vocab_size);

// Targets at `positions`, computed from the clean sentence. `tree` is needed
// by syntactic teachers.
std::vector<KDTarget> build_targets(KdMode mode, const TeacherBundle& teachers,
                                    std::span<const TokenId> clean,
                                    std::span<const std::size_t> positions,
                                    const corpus::PhraseTree* tree, std::size_t top_k);

}  // namespace sdistill::distill
