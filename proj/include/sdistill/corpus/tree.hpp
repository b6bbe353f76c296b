#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdistill::corpus {

inline constexpr std::string_view kWordLabel = "WORD";

// Rooted ordered phrase-structure tree. A node without children is a terminal
// leaf and `label` holds the (unescaped) token; every internal node has at
// least one child.
struct PhraseTree {
  std::string label;
  std::vector<PhraseTree> children;

  static PhraseTree leaf(std::string token) { return PhraseTree{std::move(token), {}}; }
  static PhraseTree node(std::string label, std::vector<PhraseTree> children) {
    return PhraseTree{std::move(label), std::move(children)};
  }

  bool is_leaf() const { return children.empty(); }
  // Internal node whose only child is a leaf.
  bool is_preterminal() const { return children.size() == 1 && children.front().is_leaf(); }

  friend bool operator==(const PhraseTree&, const PhraseTree&) = default;
};

// Offsets are 1-based character positions; end of input is size() + 1.
class TreeParseError : public std::runtime_error {
 public:
  enum class Kind { kUnbalanced, kEmptyConstituent, kStrayToken, kMissingLabel };
  TreeParseError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        kind_(kind),
        offset_(offset) {}
  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

PhraseTree parse_bracketed(std::string_view line);
std::string render_bracketed(const PhraseTree& tree);

// Terminal escaping used in tree and action files: "(" <-> "-LRB-", ")" <-> "-RRB-".
std::string escape_terminal(std::string_view token);
std::string unescape_terminal(std::string_view token);

std::vector<std::string> leaves(const PhraseTree& tree);
std::size_t count_internal(const PhraseTree& tree);
std::size_t count_leaves(const PhraseTree& tree);
// Recursively reverses the children of every node.
PhraseTree mirror(const PhraseTree& tree);
// Structural check: no internal node without children, WORD nodes hold only
// leaves, and (if `augmented`) every leaf sits directly under a WORD node.
bool is_valid(const PhraseTree& tree, bool augmented);

std::vector<PhraseTree> read_tree_file(const std::string& path);
void write_tree_file(const std::string& path, const std::vector<PhraseTree>& trees);

}  // namespace sdistill::corpus
