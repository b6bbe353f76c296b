#include "sdistill/corpus/vocab.hpp"

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::corpus {

const std::vector<std::string>& Vocabulary::reserved_tokens() {
  static const std::vector<std::string> reserved{"<pad>", "<unk>", "<mask>", "<s>", "</s>"};
  return reserved;
}

Vocabulary::Vocabulary(std::span<const std::string> tokens) {
  entries_ = reserved_tokens();
  entries_.insert(entries_.end(), tokens.begin(), tokens.end());
  std::uint64_t h = fnv1a64("sdistill-vocab");
  for (TokenId id = 0; id < entries_.size(); ++id) {
    if (entries_[id].empty()) throw DataError("vocabulary: empty token at id " + std::to_string(id));
    if (!index_.emplace(entries_[id], id).second) {
      throw DataError("vocabulary: duplicate token '" + entries_[id] + "'");
    }
    h = fnv1a64(entries_[id], h);
    h = fnv1a64("\n", h);
  }
  hash_ = hex64(h);
}

Vocabulary Vocabulary::load(const std::string& path) {
  auto lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  const auto& reserved = reserved_tokens();
  if (lines.size() < reserved.size()) throw DataError(path + ": missing reserved entries");
  for (std::size_t i = 0; i < reserved.size(); ++i) {
    if (lines[i] != reserved[i]) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected reserved token " +
                      reserved[i]);
    }
  }
  std::vector<std::string> rest(lines.begin() + static_cast<std::ptrdiff_t>(reserved.size()),
                                lines.end());
  return Vocabulary(rest);
}

void Vocabulary::save(const std::string& path) const {
  std::string out;
  for (const auto& e : entries_) {
    out += e;
    out += '\n';
  }
  write_file(path, out);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

}  // namespace sdistill::corpus
