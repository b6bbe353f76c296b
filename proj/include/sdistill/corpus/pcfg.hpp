#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdistill/corpus/tree.hpp"

namespace sdistill::corpus {

struct PcfgRule {
  std::string lhs;
  // Either one terminal (binary empty) or two nonterminals.
  std::string terminal;
  std::string left, right;
  double prob = 0.0;

  bool is_terminal() const { return left.empty(); }
};

// Probabilistic CFG restricted to A -> "t" and A -> B C rules. Depth is the
// number of nonterminal nodes on the longest root-to-leaf path.
class Pcfg {
 public:
  Pcfg(std::vector<PcfgRule> rules, int depth_cap = 32);

  // Lines "LHS -> RHS prob", terminals double-quoted, '#' comments. The first
  // rule's LHS is the start symbol.
  static Pcfg parse(const std::string& text, int depth_cap = 32);
  static Pcfg load(const std::string& path, int depth_cap = 32);

  const std::vector<PcfgRule>& rules() const { return rules_; }
  const std::string& start() const { return start_; }
  int depth_cap() const { return depth_cap_; }
  // Indices into rules() for a nonterminal, in file order.
  const std::vector<std::size_t>& rules_for(const std::string& lhs) const;
  std::vector<std::string> nonterminals() const { return order_; }
  std::vector<std::string> terminals() const;
  // Smallest derivation depth of the start symbol.
  int min_depth() const;

 private:
  std::vector<PcfgRule> rules_;
  std::vector<std::string> order_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::string start_;
  int depth_cap_;
};

// Draws a tree; derivations deeper than the cap are rejected and redrawn.
PhraseTree sample_pcfg(const Pcfg& g, std::uint64_t seed);

struct WeightedString {
  std::vector<std::string> tokens;
  double prob = 0.0;
};

// Every string derivable within the depth cap, probabilities renormalized over
// the enumerated set, sorted by token sequence.
std::vector<WeightedString> enumerate_pcfg(const Pcfg& g, std::size_t max_support = 1000000);

}  // namespace sdistill::corpus
