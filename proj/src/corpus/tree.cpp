#include "sdistill/corpus/tree.hpp"

#include <fstream>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::corpus {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) : text_(text) {}

  PhraseTree parse() {
    skip_space();
    if (pos_ >= text_.size()) {
      throw TreeParseError(TreeParseError::Kind::kEmptyConstituent, pos_ + 1, "empty input");
    }
    if (text_[pos_] != '(') {
      throw TreeParseError(TreeParseError::Kind::kStrayToken, pos_ + 1,
                           "token outside any constituent");
    }
    PhraseTree tree = parse_constituent();
    skip_space();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') {
        throw TreeParseError(TreeParseError::Kind::kUnbalanced, pos_ + 1, "unbalanced ')'");
      }
      throw TreeParseError(TreeParseError::Kind::kStrayToken, pos_ + 1,
                           "token outside any constituent");
    }
    return tree;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string_view atom() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  PhraseTree parse_constituent() {
    const std::size_t open = pos_;
    ++pos_;  // '('
    skip_space();
    if (pos_ >= text_.size()) {
      throw TreeParseError(TreeParseError::Kind::kUnbalanced, pos_ + 1, "unbalanced '('");
    }
    if (text_[pos_] == ')') {
      throw TreeParseError(TreeParseError::Kind::kEmptyConstituent, open + 1, "empty constituent");
    }
    std::string label;
    if (text_[pos_] != '(') label = std::string(atom());
    std::vector<PhraseTree> children;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) {
        throw TreeParseError(TreeParseError::Kind::kUnbalanced, pos_ + 1, "unbalanced '('");
      }
      if (text_[pos_] == ')') {
        ++pos_;
        break;
      }
      if (text_[pos_] == '(') {
        children.push_back(parse_constituent());
      } else {
        children.push_back(PhraseTree::leaf(unescape_terminal(atom())));
      }
    }
    if (children.empty()) {
      throw TreeParseError(TreeParseError::Kind::kEmptyConstituent, open + 1, "empty constituent");
    }
    if (label.empty()) {
      // PTB-style unlabeled wrapper "( (S ...))".
      if (children.size() == 1 && !children.front().is_leaf()) return std::move(children.front());
      throw TreeParseError(TreeParseError::Kind::kMissingLabel, open + 1, "constituent without label");
    }
    return PhraseTree::node(std::move(label), std::move(children));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void render_into(const PhraseTree& tree, std::string& out) {
  if (tree.is_leaf()) {
    out += escape_terminal(tree.label);
    return;
  }
  out += '(';
  out += tree.label;
  for (const auto& child : tree.children) {
    out += ' ';
    render_into(child, out);
  }
  out += ')';
}

void collect_leaves(const PhraseTree& tree, std::vector<std::string>& out) {
  if (tree.is_leaf()) {
    out.push_back(tree.label);
    return;
  }
  for (const auto& child : tree.children) collect_leaves(child, out);
}

std::string replace_all(std::string_view s, std::string_view from, std::string_view to) {
  std::string out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(from, start);
    if (pos == std::string_view::npos) {
      out += s.substr(start);
      return out;
    }
    out += s.substr(start, pos - start);
    out += to;
    start = pos + from.size();
  }
}

}  // namespace

PhraseTree parse_bracketed(std::string_view line) { return BracketParser(line).parse(); }

std::string render_bracketed(const PhraseTree& tree) {
  std::string out;
  render_into(tree, out);
  return out;
}

std::string escape_terminal(std::string_view token) {
  return replace_all(replace_all(token, "(", "-LRB-"), ")", "-RRB-");
}

std::string unescape_terminal(std::string_view token) {
  return replace_all(replace_all(token, "-LRB-", "("), "-RRB-", ")");
}

std::vector<std::string> leaves(const PhraseTree& tree) {
  std::vector<std::string> out;
  collect_leaves(tree, out);
  return out;
}

std::size_t count_internal(const PhraseTree& tree) {
  if (tree.is_leaf()) return 0;
  std::size_t n = 1;
  for (const auto& child : tree.children) n += count_internal(child);
  return n;
}

std::size_t count_leaves(const PhraseTree& tree) {
  if (tree.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& child : tree.children) n += count_leaves(child);
  return n;
}

PhraseTree mirror(const PhraseTree& tree) {
  PhraseTree out{tree.label, {}};
  out.children.reserve(tree.children.size());
  for (auto it = tree.children.rbegin(); it != tree.children.rend(); ++it) {
    out.children.push_back(mirror(*it));
  }
  return out;
}

bool is_valid(const PhraseTree& tree, bool augmented) {
  if (tree.is_leaf()) return false;  // the root must be a constituent
  for (const auto& child : tree.children) {
    if (tree.label == kWordLabel) {
      if (!child.is_leaf()) return false;
      continue;
    }
    if (child.is_leaf()) {
      if (augmented) return false;
      continue;
    }
    if (!is_valid(child, augmented)) return false;
  }
  return true;
}

std::vector<PhraseTree> read_tree_file(const std::string& path) {
  std::vector<PhraseTree> trees;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      trees.push_back(parse_bracketed(lines[i]));
    } catch (const TreeParseError& e) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return trees;
}

void write_tree_file(const std::string& path, const std::vector<PhraseTree>& trees) {
  std::string out;
  for (const auto& t : trees) {
    out += render_bracketed(t);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace sdistill::corpus
