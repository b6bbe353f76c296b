#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sdistill/corpus/vocab.hpp"
#include "sdistill/teachers/teacher.hpp"

namespace sdistill::teachers {

// Interpolated absolute discounting, recursing down to a unigram that is
// itself interpolated with the uniform distribution over the output support.
// Histories are <s> + prefix truncated to the last order-1 tokens; a history
// never seen in training falls back to the next shorter one.
class NGramModel : public Teacher {
 public:
  struct HistoryStats {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
  };

  NGramModel(std::size_t vocab_size, int order, double discount, Direction dir);
  // `corpus` is in natural order; R2L models count the reversed sentences.
  static NGramModel train(const std::vector<std::vector<TokenId>>& corpus, std::size_t vocab_size,
                          int order, double discount, Direction dir = Direction::kL2R);

  std::size_t vocab_size() const override { return vocab_size_; }
  Direction direction() const override { return dir_; }
  std::unique_ptr<Cursor> start() const override;

  int order() const { return order_; }
  double discount() const { return discount_; }
  void add_count(std::span<const TokenId> history, TokenId next, std::uint64_t count);
  // Distribution after `history` (already including <s>, at most order-1 long).
  void dist_for(std::span<const TokenId> history, std::span<double> out) const;

  void save(const std::string& path, const corpus::Vocabulary& vocab) const;
  static NGramModel load(const std::string& path, const corpus::Vocabulary& vocab);

 private:
  static std::string key(std::span<const TokenId> history);

  std::size_t vocab_size_;
  int order_;
  double discount_;
  Direction dir_;
  std::vector<std::uint8_t> support_;
  std::unordered_map<std::string, HistoryStats> stats_;
};

}  // namespace sdistill::teachers
