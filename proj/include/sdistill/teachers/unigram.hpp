#pragma once

#include <string>
#include <vector>

#include "sdistill/corpus/vocab.hpp"
#include "sdistill/teachers/teacher.hpp"

namespace sdistill::teachers {

// Add-k smoothed unigram q(w) over the non-reserved vocabulary. As a teacher
// it emits </s> with its empirical sentence-end rate and spreads the rest by q.
class UnigramModel : public Teacher {
 public:
  UnigramModel(std::vector<std::uint64_t> counts, std::uint64_t sentences, double k,
               Direction dir = Direction::kL2R);
  static UnigramModel train(const std::vector<std::vector<TokenId>>& corpus,
                            std::size_t vocab_size, double k = 1.0,
                            Direction dir = Direction::kL2R);

  std::size_t vocab_size() const override { return counts_.size(); }
  Direction direction() const override { return dir_; }
  std::unique_ptr<Cursor> start() const override;

  double q(TokenId w) const { return q_[w]; }
  // q over the whole vocabulary, zero on reserved ids.
  const std::vector<double>& q_dist() const { return q_; }
  double smoothing() const { return k_; }
  double eos_probability() const { return p_eos_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t sentences() const { return sentences_; }

  // "history \t token \t count" TSV with an empty history column; the </s>
  // row holds the sentence count.
  void save(const std::string& path, const corpus::Vocabulary& vocab) const;
  static UnigramModel load(const std::string& path, const corpus::Vocabulary& vocab);

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t sentences_;
  double k_;
  Direction dir_;
  std::vector<double> q_;
  std::vector<double> next_;
  double p_eos_ = 0.0;
};

}  // namespace sdistill::teachers
