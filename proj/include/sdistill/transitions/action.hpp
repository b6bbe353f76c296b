#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sdistill::transitions {

enum class ActionKind { kNT, kGen, kReduce };

// NT(label) | GEN(token) | REDUCE. The payload is empty exactly for REDUCE.
struct Action {
  ActionKind kind = ActionKind::kReduce;
  std::string payload;

  static Action nt(std::string label) { return {ActionKind::kNT, std::move(label)}; }
  static Action gen(std::string token) { return {ActionKind::kGen, std::move(token)}; }
  static Action reduce() { return {ActionKind::kReduce, {}}; }

  // "NT(S)", "GEN(##og)", "REDUCE"; terminals are written escaped.
  std::string to_string() const;
  static Action parse(std::string_view text);

  friend bool operator==(const Action&, const Action&) = default;
};

enum class Direction { kL2R, kR2L };

std::string_view direction_name(Direction d);  // "l2r" / "r2l"
Direction parse_direction(std::string_view s);

using ActionSequence = std::vector<Action>;

// Action file: "#direction=l2r|r2l" header, one action per line, a blank line
// between sentences.
std::string format_action_file(Direction dir, const std::vector<ActionSequence>& sentences);
std::vector<ActionSequence> parse_action_file(std::string_view text, Direction* dir_out);
void write_action_file(const std::string& path, Direction dir,
                       const std::vector<ActionSequence>& sentences);
std::vector<ActionSequence> read_action_file(const std::string& path, Direction* dir_out);

}  // namespace sdistill::transitions
