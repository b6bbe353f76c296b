#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sdistill::corpus {

using TokenId = std::uint32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kMask = 2;
inline constexpr TokenId kBos = 3;
inline constexpr TokenId kEos = 4;
inline constexpr TokenId kNumReserved = 5;

inline constexpr std::string_view kContinuationPrefix = "##";

inline bool is_reserved(TokenId id) { return id < kNumReserved; }

// Token inventory with a fixed reserved prefix:
// <pad>=0 <unk>=1 <mask>=2 <s>=3 </s>=4.
class Vocabulary {
 public:
  static const std::vector<std::string>& reserved_tokens();

  // `tokens` are the non-reserved entries, in id order starting at 5.
  explicit Vocabulary(std::span<const std::string> tokens);
  // Vocab file: one token per line, id = line index, first five lines reserved.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& token(TokenId id) const { return entries_.at(id); }
  std::optional<TokenId> find(std::string_view token) const;
  // Unknown strings map to <unk>.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::vector<std::string>& entries() const { return entries_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  // Stable content hash (hex), recorded in derived files.
  const std::string& hash() const { return hash_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> index_;
  std::string hash_;
};

}  // namespace sdistill::corpus
