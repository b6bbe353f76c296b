#include "sdistill/teachers/unigram.hpp"

#include <algorithm>
#include <map>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::teachers {
namespace {

class ConstantCursor : public Cursor {
 public:
  explicit ConstantCursor(const std::vector<double>* d) : d_(d) {}
  std::unique_ptr<Cursor> clone() const override { return std::make_unique<ConstantCursor>(*this); }
  void push(TokenId) override {}
  void dist(std::span<double> out) const override { std::copy(d_->begin(), d_->end(), out.begin()); }

 private:
  const std::vector<double>* d_;
};

}  // namespace

UnigramModel::UnigramModel(std::vector<std::uint64_t> counts, std::uint64_t sentences, double k,
                           Direction dir)
    : counts_(std::move(counts)), sentences_(sentences), k_(k), dir_(dir) {
  if (k_ < 0.0) throw UsageError("unigram smoothing must be >= 0");
  const std::size_t v = counts_.size();
  if (v <= corpus::kNumReserved) throw DataError("vocabulary has no non-reserved tokens");
  std::uint64_t n = 0;
  for (std::size_t w = corpus::kNumReserved; w < v; ++w) n += counts_[w];
  const double denom = static_cast<double>(n) + k_ * static_cast<double>(v - corpus::kNumReserved);
  if (!(denom > 0.0)) throw DataError("unigram model trained on an empty corpus");
  q_.assign(v, 0.0);
  for (std::size_t w = corpus::kNumReserved; w < v; ++w) {
    q_[w] = (static_cast<double>(counts_[w]) + k_) / denom;
  }
  const double total = static_cast<double>(n + sentences_);
  p_eos_ = total > 0.0 ? static_cast<double>(sentences_) / total : 0.0;
  next_.assign(v, 0.0);
  for (std::size_t w = corpus::kNumReserved; w < v; ++w) next_[w] = (1.0 - p_eos_) * q_[w];
  next_[corpus::kEos] = p_eos_;
}

UnigramModel UnigramModel::train(const std::vector<std::vector<TokenId>>& corpus,
                                 std::size_t vocab_size, double k, Direction dir) {
  if (corpus.empty()) throw DataError("unigram model trained on an empty corpus");
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& s : corpus) {
    for (TokenId t : s) {
      if (t >= vocab_size) throw DataError("token id outside vocabulary");
      ++counts[t];
    }
  }
  return UnigramModel(std::move(counts), corpus.size(), k, dir);
}

std::unique_ptr<Cursor> UnigramModel::start() const { return std::make_unique<ConstantCursor>(&next_); }

void UnigramModel::save(const std::string& path, const corpus::Vocabulary& vocab) const {
  if (vocab.size() != counts_.size()) throw UsageError("vocabulary size mismatch");
  std::map<std::string, std::uint64_t> rows;
  for (std::size_t w = corpus::kNumReserved; w < counts_.size(); ++w) {
    if (counts_[w] > 0) rows[vocab.token(static_cast<TokenId>(w))] = counts_[w];
  }
  rows[vocab.token(corpus::kEos)] = sentences_;
  std::string out = "# sdistill-unigram 1 k=" + format_double(k_) + " direction=" +
                    std::string(transitions::direction_name(dir_)) + " vocab=" + vocab.hash() + "\n";
  for (const auto& [tok, c] : rows) out += "\t" + tok + "\t" + std::to_string(c) + "\n";
  write_file(path, out);
}

UnigramModel UnigramModel::load(const std::string& path, const corpus::Vocabulary& vocab) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty unigram file");
  const auto head = split_whitespace(lines[0]);
  if (head.size() < 3 || head[0] != "#" || head[1] != "sdistill-unigram") {
    throw DataError(path + ": not a unigram model file");
  }
  double k = 1.0;
  Direction dir = Direction::kL2R;
  for (std::size_t i = 3; i < head.size(); ++i) {
    auto eq = head[i].find('=');
    const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
    if (key == "k") k = parse_double(val);
    else if (key == "direction") dir = transitions::parse_direction(val);
    else if (key == "vocab" && val != vocab.hash()) throw DataError(path + ": vocabulary hash mismatch");
  }
  std::vector<std::uint64_t> counts(vocab.size(), 0);
  std::uint64_t sentences = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 3 || !f[0].empty()) throw DataError(path + ": bad row " + std::to_string(i + 1));
    auto id = vocab.find(f[1]);
    if (!id) throw DataError(path + ": unknown token '" + f[1] + "'");
    const auto c = static_cast<std::uint64_t>(parse_int(f[2]));
    if (*id == corpus::kEos) sentences = c;
    else counts[*id] = c;
  }
  return UnigramModel(std::move(counts), sentences, k, dir);
}

}  // namespace sdistill::teachers
