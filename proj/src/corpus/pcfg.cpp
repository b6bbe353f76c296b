#include "sdistill/corpus/pcfg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::corpus {
namespace {

std::size_t index_of(const std::vector<std::string>& order, const std::string& nt) {
  auto it = std::find(order.begin(), order.end(), nt);
  return static_cast<std::size_t>(it - order.begin());
}

bool is_quoted(const std::string& s) {
  return s.size() >= 2 && s.front() == '"' && s.back() == '"';
}

}  // namespace

Pcfg::Pcfg(std::vector<PcfgRule> rules, int depth_cap) : rules_(std::move(rules)), depth_cap_(depth_cap) {
  if (rules_.empty()) throw DataError("grammar has no rules");
  if (depth_cap_ < 1) throw DataError("grammar depth cap must be >= 1");
  start_ = rules_.front().lhs;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    std::size_t k = index_of(order_, r.lhs);
    if (k == order_.size()) {
      order_.push_back(r.lhs);
      by_lhs_.emplace_back();
    }
    by_lhs_[k].push_back(i);
    if (!(r.prob >= 0.0 && r.prob <= 1.0)) {
      throw DataError("rule " + std::to_string(i + 1) + ": probability out of range");
    }
  }
  for (const auto& r : rules_) {
    if (r.is_terminal()) continue;
    for (const auto* nt : {&r.left, &r.right}) {
      if (index_of(order_, *nt) == order_.size()) {
        throw DataError("nonterminal '" + *nt + "' has no rules");
      }
    }
  }
  for (std::size_t k = 0; k < order_.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i : by_lhs_[k]) sum += rules_[i].prob;
    if (std::abs(sum - 1.0) > 1e-12) {
      throw DataError("rules for '" + order_[k] + "' sum to " + format_double(sum));
    }
  }
}

Pcfg Pcfg::parse(const std::string& text, int depth_cap) {
  std::vector<PcfgRule> rules;
  const auto lines = split(text, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto line = trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_whitespace(line);
    const std::string where = "grammar line " + std::to_string(ln + 1);
    if (fields.size() < 4 || fields[1] != "->") throw DataError(where + ": expected 'LHS -> RHS prob'");
    PcfgRule rule;
    rule.lhs = fields[0];
    rule.prob = parse_double(fields.back());
    std::vector<std::string> rhs(fields.begin() + 2, fields.end() - 1);
    if (rhs.size() == 1 && is_quoted(rhs[0])) {
      rule.terminal = rhs[0].substr(1, rhs[0].size() - 2);
      if (rule.terminal.empty()) throw DataError(where + ": empty terminal");
    } else if (rhs.size() == 2 && !is_quoted(rhs[0]) && !is_quoted(rhs[1])) {
      rule.left = rhs[0];
      rule.right = rhs[1];
    } else {
      throw DataError(where + ": right-hand side must be one quoted terminal or two nonterminals");
    }
    rules.push_back(std::move(rule));
  }
  return Pcfg(std::move(rules), depth_cap);
}

Pcfg Pcfg::load(const std::string& path, int depth_cap) { return parse(read_file(path), depth_cap); }

const std::vector<std::size_t>& Pcfg::rules_for(const std::string& lhs) const {
  std::size_t k = index_of(order_, lhs);
  if (k == order_.size()) throw DataError("unknown nonterminal '" + lhs + "'");
  return by_lhs_[k];
}

std::vector<std::string> Pcfg::terminals() const {
  std::vector<std::string> out;
  for (const auto& r : rules_) {
    if (r.is_terminal() && std::find(out.begin(), out.end(), r.terminal) == out.end()) {
      out.push_back(r.terminal);
    }
  }
  return out;
}

int Pcfg::min_depth() const {
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  std::vector<int> depth(order_.size(), kInf);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      for (std::size_t i : by_lhs_[k]) {
        const auto& r = rules_[i];
        if (r.prob <= 0.0) continue;
        int d = r.is_terminal() ? 1
                                : 1 + std::max(depth[index_of(order_, r.left)],
                                               depth[index_of(order_, r.right)]);
        if (d < depth[k]) {
          depth[k] = d;
          changed = true;
        }
      }
    }
  }
  return depth[index_of(order_, start_)];
}

namespace {

struct CapExceeded {};

PhraseTree expand(const Pcfg& g, const std::string& nt, int depth, Rng& rng) {
  if (depth > g.depth_cap()) throw CapExceeded{};
  const auto& idx = g.rules_for(nt);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t chosen = idx.back();
  for (std::size_t i : idx) {
    acc += g.rules()[i].prob;
    if (u < acc) {
      chosen = i;
      break;
    }
  }
  const auto& r = g.rules()[chosen];
  if (r.is_terminal()) return PhraseTree::node(nt, {PhraseTree::leaf(r.terminal)});
  PhraseTree left = expand(g, r.left, depth + 1, rng);
  PhraseTree right = expand(g, r.right, depth + 1, rng);
  return PhraseTree::node(nt, {std::move(left), std::move(right)});
}

}  // namespace

PhraseTree sample_pcfg(const Pcfg& g, std::uint64_t seed) {
  if (g.min_depth() > g.depth_cap()) {
    throw DataError("depth cap " + std::to_string(g.depth_cap()) +
                    " admits no derivation of the start symbol");
  }
  Rng rng(seed);
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    try {
      return expand(g, g.start(), 1, rng);
    } catch (const CapExceeded&) {
    }
  }
  throw DataError("sampling rejected " + std::to_string(kMaxAttempts) + " derivations at the depth cap");
}

namespace {

using Support = std::vector<WeightedString>;

class Enumerator {
 public:
  Enumerator(const Pcfg& g, std::size_t max_support) : g_(g), max_(max_support) {}

  // Strings derivable from nt at the given depth (unnormalized, unmerged).
  const Support& strings(const std::string& nt, int depth) {
    auto key = std::make_pair(nt, depth);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Support out;
    if (depth <= g_.depth_cap()) {
      for (std::size_t i : g_.rules_for(nt)) {
        const auto& r = g_.rules()[i];
        if (r.prob <= 0.0) continue;
        if (r.is_terminal()) {
          out.push_back({{r.terminal}, r.prob});
          continue;
        }
        const Support& left = strings(r.left, depth + 1);
        const Support& right = strings(r.right, depth + 1);
        if (out.size() + left.size() * right.size() > max_) {
          throw DataError("PCFG support exceeds " + std::to_string(max_) + " strings");
        }
        for (const auto& a : left) {
          for (const auto& b : right) {
            WeightedString s;
            s.tokens = a.tokens;
            s.tokens.insert(s.tokens.end(), b.tokens.begin(), b.tokens.end());
            s.prob = r.prob * a.prob * b.prob;
            out.push_back(std::move(s));
          }
        }
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  const Pcfg& g_;
  std::size_t max_;
  std::map<std::pair<std::string, int>, Support> memo_;
};

}  // namespace

std::vector<WeightedString> enumerate_pcfg(const Pcfg& g, std::size_t max_support) {
  Enumerator e(g, max_support);
  const Support& raw = e.strings(g.start(), 1);
  // Ambiguous strings accumulate the mass of all their derivations.
  std::map<std::vector<std::string>, double> merged;
  for (const auto& s : raw) merged[s.tokens] += s.prob;
  if (merged.empty()) throw DataError("PCFG derives no string within the depth cap");
  double total = 0.0;
  for (const auto& [tokens, p] : merged) total += p;
  std::vector<WeightedString> out;
  out.reserve(merged.size());
  for (auto& [tokens, p] : merged) out.push_back({tokens, p / total});
  return out;
}

}  // namespace sdistill::corpus
