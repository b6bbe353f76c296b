#include "sdistill/transitions/action.hpp"

#include "sdistill/corpus/tree.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::transitions {

std::string Action::to_string() const {
  switch (kind) {
    case ActionKind::kNT:
      return "NT(" + payload + ")";
    case ActionKind::kGen:
      return "GEN(" + corpus::escape_terminal(payload) + ")";
    case ActionKind::kReduce:
      return "REDUCE";
  }
  return {};
}

Action Action::parse(std::string_view text) {
  text = trim(text);
  if (text == "REDUCE") return reduce();
  auto payload_of = [&](std::size_t prefix) -> std::string {
    if (text.size() <= prefix + 1 || text.back() != ')') {
      throw DataError("malformed action '" + std::string(text) + "'");
    }
    return std::string(text.substr(prefix, text.size() - prefix - 1));
  };
  if (text.starts_with("NT(")) return nt(payload_of(3));
  if (text.starts_with("GEN(")) return gen(corpus::unescape_terminal(payload_of(4)));
  throw DataError("unknown action '" + std::string(text) + "'");
}

std::string_view direction_name(Direction d) { return d == Direction::kL2R ? "l2r" : "r2l"; }

Direction parse_direction(std::string_view s) {
  if (s == "l2r") return Direction::kL2R;
  if (s == "r2l") return Direction::kR2L;
  throw UsageError("direction must be l2r or r2l, got '" + std::string(s) + "'");
}

std::string format_action_file(Direction dir, const std::vector<ActionSequence>& sentences) {
  std::string out = "#direction=";
  out += direction_name(dir);
  out += '\n';
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s) out += '\n';
    for (const auto& a : sentences[s]) {
      out += a.to_string();
      out += '\n';
    }
  }
  return out;
}

std::vector<ActionSequence> parse_action_file(std::string_view text, Direction* dir_out) {
  auto lines = split(text, '\n');
  if (lines.empty() || !trim(lines[0]).starts_with("#direction=")) {
    throw DataError("action file: missing '#direction=' header");
  }
  Direction dir = parse_direction(trim(lines[0]).substr(std::string_view("#direction=").size()));
  if (dir_out) *dir_out = dir;
  std::vector<ActionSequence> out;
  ActionSequence current;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty()) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    try {
      current.push_back(Action::parse(line));
    } catch (const DataError& e) {
      throw DataError("action file line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

void write_action_file(const std::string& path, Direction dir,
                       const std::vector<ActionSequence>& sentences) {
  write_file(path, format_action_file(dir, sentences));
}

std::vector<ActionSequence> read_action_file(const std::string& path, Direction* dir_out) {
  return parse_action_file(read_file(path), dir_out);
}

}  // namespace sdistill::transitions
