#include "sdistill/teachers/enumeration.hpp"

#include <algorithm>

#include "sdistill/util/error.hpp"

namespace sdistill::teachers {
namespace {

class TrieCursor : public Cursor {
 public:
  explicit TrieCursor(const EnumerationLM* m) : m_(m) {}
  std::unique_ptr<Cursor> clone() const override { return std::make_unique<TrieCursor>(*this); }
  void push(TokenId t) override {
    const long c = m_->child(node_, t);
    if (c < 0) throw DataError("prefix leaves the enumerated support at token id " + std::to_string(t));
    node_ = static_cast<std::uint32_t>(c);
  }
  void dist(std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    const auto& n = m_->node(node_);
    for (const auto& [t, c] : n.children) out[t] = m_->node(c).mass / n.mass;
    out[corpus::kEos] = n.end / n.mass;
  }

 private:
  const EnumerationLM* m_;
  std::uint32_t node_ = 0;
};

}  // namespace

EnumerationLM::EnumerationLM(std::size_t vocab_size, const std::vector<WeightedSequence>& support,
                             Direction dir)
    : vocab_size_(vocab_size), dir_(dir), nodes_(1) {
  for (const auto& s : support) {
    if (!(s.prob > 0.0)) continue;
    std::vector<TokenId> seq = s.tokens;
    if (dir == Direction::kR2L) std::reverse(seq.begin(), seq.end());
    std::uint32_t cur = 0;
    nodes_[cur].mass += s.prob;
    for (TokenId t : seq) {
      if (t >= vocab_size || corpus::is_reserved(t)) {
        throw DataError("enumerated support contains token id " + std::to_string(t));
      }
      long c = child(cur, t);
      if (c < 0) {
        c = static_cast<long>(nodes_.size());
        auto& kids = nodes_[cur].children;
        kids.insert(std::lower_bound(kids.begin(), kids.end(), std::make_pair(t, 0u)),
                    {t, static_cast<std::uint32_t>(c)});
        nodes_.emplace_back();
      }
      cur = static_cast<std::uint32_t>(c);
      nodes_[cur].mass += s.prob;
    }
    nodes_[cur].end += s.prob;
  }
  if (!(nodes_[0].mass > 0.0)) throw DataError("empty enumerated support");
}

long EnumerationLM::child(std::uint32_t node, TokenId t) const {
  const auto& kids = nodes_[node].children;
  auto it = std::lower_bound(kids.begin(), kids.end(), std::make_pair(t, 0u));
  if (it == kids.end() || it->first != t) return -1;
  return it->second;
}

std::unique_ptr<Cursor> EnumerationLM::start() const { return std::make_unique<TrieCursor>(this); }

double EnumerationLM::joint(std::span<const TokenId> tokens) const {
  std::uint32_t cur = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const TokenId t = dir_ == Direction::kR2L ? tokens[tokens.size() - 1 - k] : tokens[k];
    const long c = child(cur, t);
    if (c < 0) return 0.0;
    cur = static_cast<std::uint32_t>(c);
  }
  return nodes_[cur].end / nodes_[0].mass;
}

std::vector<WeightedSequence> tokenize_support(const std::vector<corpus::WeightedString>& strings,
                                               const corpus::Tokenizer& tok) {
  std::vector<WeightedSequence> out;
  out.reserve(strings.size());
  for (const auto& s : strings) {
    WeightedSequence w;
    w.prob = s.prob;
    for (const auto& word : s.tokens) {
      for (const auto& piece : tok.tokenize_word(word)) w.tokens.push_back(tok.vocabulary().id(piece));
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace sdistill::teachers
