#include "sdistill/distill/corrupt.hpp"

#include <cmath>

#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::distill {

void CorruptionConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw UsageError("corruption rate must be in [0, 1]");
  for (double s : {mask_share, random_share, keep_share}) {
    if (!(s >= 0.0 && s <= 1.0)) throw UsageError("corruption shares must be in [0, 1]");
  }
  if (std::abs(mask_share + random_share + keep_share - 1.0) > 1e-9) {
    throw UsageError("corruption shares must sum to 1");
  }
}

CorruptionRecord corrupt(std::span<const TokenId> tokens, std::size_t vocab_size, std::uint64_t seed,
                         const CorruptionConfig& cfg) {
  cfg.validate();
  if (vocab_size <= corpus::kNumReserved) throw UsageError("vocabulary has no non-reserved tokens");
  CorruptionRecord r;
  r.original.assign(tokens.begin(), tokens.end());
  r.corrupted = r.original;
  Rng rng(seed);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (corpus::is_reserved(tokens[i]) || tokens[i] >= vocab_size) {
      throw DataError("cannot corrupt reserved or out-of-vocabulary token id " + std::to_string(tokens[i]));
    }
    if (!rng.bernoulli(cfg.rate)) continue;
    r.masked.push_back(i);
    const double u = rng.uniform();
    if (u < cfg.mask_share) {
      r.corrupted[i] = corpus::kMask;
    } else if (u < cfg.mask_share + cfg.random_share) {
      r.corrupted[i] = static_cast<TokenId>(corpus::kNumReserved + rng.below(vocab_size - corpus::kNumReserved));
    }
  }
  return r;
}

std::vector<MaskedSentence> corrupt_corpus(const std::vector<std::vector<TokenId>>& corpus,
                                           std::size_t vocab_size, std::uint64_t seed, std::size_t dupe,
                                           const CorruptionConfig& cfg) {
  if (dupe == 0) throw UsageError("dupe must be >= 1");
  std::vector<MaskedSentence> out;
  out.reserve(dupe * corpus.size());
  for (std::size_t d = 0; d < dupe; ++d) {
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      out.push_back({s, corrupt(corpus[s], vocab_size, derive_seed(seed, "corrupt", d * corpus.size() + s), cfg)});
    }
  }
  return out;
}

namespace {

template <typename T>
std::string join_ids(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  for (const auto& w : split_whitespace(s)) {
    const long long v = parse_int(w);
    if (v < 0) throw DataError("negative id in mask file");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

}  // namespace

std::string format_mask_file(const std::vector<MaskedSentence>& masks, const std::string& vocab_hash) {
  std::string out = "# sdistill-masks " + std::to_string(kMaskFormatVersion) + " vocab=" + vocab_hash + "\n";
  for (const auto& m : masks) {
    out += std::to_string(m.sentence) + "\t" + join_ids(m.record.original) + "\t" + join_ids(m.record.corrupted) +
           "\t" + join_ids(m.record.masked) + "\n";
  }
  return out;
}

std::vector<MaskedSentence> parse_mask_file(const std::string& text, const std::string& expected_vocab_hash) {
  const auto lines = split(text, '\n');
  const std::string prefix = "# sdistill-masks " + std::to_string(kMaskFormatVersion) + " vocab=";
  if (lines.empty() || lines[0].rfind(prefix, 0) != 0) throw DataError("mask file: missing or unsupported header");
  if (lines[0].substr(prefix.size()) != expected_vocab_hash) throw DataError("mask file: vocabulary hash mismatch");
  std::vector<MaskedSentence> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 4) throw DataError("mask file line " + std::to_string(i + 1) + ": expected 4 fields");
    MaskedSentence m;
    m.sentence = static_cast<std::size_t>(parse_int(f[0]));
    m.record.original = parse_list<TokenId>(f[1]);
    m.record.corrupted = parse_list<TokenId>(f[2]);
    m.record.masked = parse_list<std::size_t>(f[3]);
    if (m.record.corrupted.size() != m.record.original.size()) {
      throw DataError("mask file line " + std::to_string(i + 1) + ": length mismatch");
    }
    for (std::size_t k = 0; k < m.record.masked.size(); ++k) {
      if (m.record.masked[k] >= m.record.original.size() || (k && m.record.masked[k] <= m.record.masked[k - 1])) {
        throw DataError("mask file line " + std::to_string(i + 1) + ": bad masked positions");
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace sdistill::distill
