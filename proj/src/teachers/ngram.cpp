#include "sdistill/teachers/ngram.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <tuple>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::teachers {
namespace {

std::vector<TokenId> unkey(const std::string& k) {
  std::vector<TokenId> ids(k.size() / sizeof(TokenId));
  std::memcpy(ids.data(), k.data(), k.size());
  return ids;
}

class NGramCursor : public Cursor {
 public:
  explicit NGramCursor(const NGramModel* m) : m_(m), hist_{corpus::kBos} { trim(); }
  std::unique_ptr<Cursor> clone() const override { return std::make_unique<NGramCursor>(*this); }
  void push(TokenId t) override {
    hist_.push_back(t);
    trim();
  }
  void dist(std::span<double> out) const override { m_->dist_for(hist_, out); }

 private:
  void trim() {
    const std::size_t keep = static_cast<std::size_t>(m_->order() - 1);
    if (hist_.size() > keep) hist_.erase(hist_.begin(), hist_.end() - static_cast<long>(keep));
  }
  const NGramModel* m_;
  std::vector<TokenId> hist_;
};

}  // namespace

NGramModel::NGramModel(std::size_t vocab_size, int order, double discount, Direction dir)
    : vocab_size_(vocab_size), order_(order), discount_(discount), dir_(dir),
      support_(output_mask(vocab_size)) {
  if (order < 1) throw UsageError("n-gram order must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0)) throw UsageError("discount must be in [0, 1]");
}

std::string NGramModel::key(std::span<const TokenId> history) {
  return std::string(reinterpret_cast<const char*>(history.data()), history.size_bytes());
}

void NGramModel::add_count(std::span<const TokenId> history, TokenId next, std::uint64_t count) {
  if (next >= vocab_size_ || !support_[next]) {
    throw DataError("n-gram count for token id " + std::to_string(next) + " outside the output support");
  }
  auto& s = stats_[key(history)];
  s.total += count;
  s.next[next] += count;
}

NGramModel NGramModel::train(const std::vector<std::vector<TokenId>>& corpus,
                             std::size_t vocab_size, int order, double discount, Direction dir) {
  NGramModel m(vocab_size, order, discount, dir);
  if (corpus.empty()) throw DataError("n-gram model trained on an empty corpus");
  std::vector<TokenId> seq;
  for (const auto& s : corpus) {
    seq.assign(1, corpus::kBos);
    if (dir == Direction::kR2L) {
      seq.insert(seq.end(), s.rbegin(), s.rend());
    } else {
      seq.insert(seq.end(), s.begin(), s.end());
    }
    seq.push_back(corpus::kEos);
    for (std::size_t j = 1; j < seq.size(); ++j) {
      for (std::size_t len = 0; len < static_cast<std::size_t>(order) && len <= j; ++len) {
        m.add_count(std::span<const TokenId>(seq.data() + j - len, len), seq[j], 1);
      }
    }
  }
  return m;
}

void NGramModel::dist_for(std::span<const TokenId> history, std::span<double> out) const {
  std::size_t support = 0;
  for (auto s : support_) support += s;
  const double u = 1.0 / static_cast<double>(support);
  for (std::size_t w = 0; w < vocab_size_; ++w) out[w] = support_[w] ? u : 0.0;
  const std::size_t longest = std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  std::vector<double> next(vocab_size_);
  for (std::size_t len = 0; len <= longest; ++len) {
    auto it = stats_.find(key(history.subspan(history.size() - len)));
    if (it == stats_.end() || it->second.total == 0) continue;
    const HistoryStats& s = it->second;
    const double total = static_cast<double>(s.total);
    const double backoff = discount_ * static_cast<double>(s.next.size()) / total;
    for (std::size_t w = 0; w < vocab_size_; ++w) out[w] *= backoff;
    for (const auto& [w, c] : s.next) {
      out[w] += std::max(static_cast<double>(c) - discount_, 0.0) / total;
    }
  }
}

std::unique_ptr<Cursor> NGramModel::start() const { return std::make_unique<NGramCursor>(this); }

void NGramModel::save(const std::string& path, const corpus::Vocabulary& vocab) const {
  if (vocab.size() != vocab_size_) throw UsageError("vocabulary size mismatch");
  std::set<std::tuple<std::string, std::string, std::uint64_t>> rows;
  for (const auto& [k, s] : stats_) {
    std::vector<std::string> hist;
    for (TokenId t : unkey(k)) hist.push_back(vocab.token(t));
    const std::string h = join(hist, " ");
    for (const auto& [w, c] : s.next) rows.emplace(h, vocab.token(w), c);
  }
  std::string out = "# sdistill-ngram 1 order=" + std::to_string(order_) +
                    " discount=" + format_double(discount_) + " direction=" +
                    std::string(transitions::direction_name(dir_)) + " vocab=" + vocab.hash() + "\n";
  for (const auto& [h, w, c] : rows) out += h + "\t" + w + "\t" + std::to_string(c) + "\n";
  write_file(path, out);
}

NGramModel NGramModel::load(const std::string& path, const corpus::Vocabulary& vocab) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty n-gram file");
  const auto head = split_whitespace(lines[0]);
  if (head.size() < 3 || head[0] != "#" || head[1] != "sdistill-ngram") {
    throw DataError(path + ": not an n-gram model file");
  }
  int order = 0;
  double discount = 0.0;
  Direction dir = Direction::kL2R;
  for (std::size_t i = 3; i < head.size(); ++i) {
    auto eq = head[i].find('=');
    const std::string key = head[i].substr(0, eq), val = head[i].substr(eq + 1);
    if (key == "order") order = static_cast<int>(parse_int(val));
    else if (key == "discount") discount = parse_double(val);
    else if (key == "direction") dir = transitions::parse_direction(val);
    else if (key == "vocab" && val != vocab.hash()) throw DataError(path + ": vocabulary hash mismatch");
  }
  NGramModel m(vocab.size(), order, discount, dir);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 3) throw DataError(path + ": bad row " + std::to_string(i + 1));
    std::vector<TokenId> hist;
    for (const auto& tok : split_whitespace(f[0])) {
      auto id = vocab.find(tok);
      if (!id) throw DataError(path + ": unknown token '" + tok + "'");
      hist.push_back(*id);
    }
    auto id = vocab.find(f[1]);
    if (!id) throw DataError(path + ": unknown token '" + f[1] + "'");
    m.add_count(hist, *id, static_cast<std::uint64_t>(parse_int(f[2])));
  }
  return m;
}

}  // namespace sdistill::teachers
