#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sdistill::cli {

struct KeySpec {
  std::string name;  // dashed, e.g. "learning-rate"
  std::string value;  // default; empty means unset
  std::string help;
  bool flag = false;
};

struct CommandSpec {
  std::string name;
  std::vector<KeySpec> keys;
};

// Keys every subcommand accepts.
std::vector<KeySpec> global_keys();

// "learning_rate" -> "learning-rate".
std::string normalize_key(std::string key);

// Resolved key=value settings of one subcommand run. Resolution order, later
// wins: declared defaults, config file (global keys, then "command.key"
// keys), command-line flags, --set overrides.
class RunConfig {
 public:
  RunConfig(std::string command, const std::vector<CommandSpec>& all);

  // Config file text: "key=value" lines, '#' comments. Keys known only to
  // other subcommands are skipped; keys known to none are a UsageError.
  void merge_file_text(const std::string& text, const std::string& origin);
  void set_from_cli(const std::string& key, const std::string& value);
  // "key=value" or "command.key=value".
  void apply_override(const std::string& assignment);

  const std::string& command() const { return command_; }
  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string required(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;  // comma separated

  // Sorted "key=value" lines; run plumbing (jobs, config, set) is left out.
  std::string echo() const;

 private:
  enum class Scope { kMine, kOther };
  Scope classify(const std::string& key, const std::string& origin) const;
  void assign(const std::string& key, const std::string& value, const std::string& origin, bool section);

  std::string command_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> priority_;  // 0 default, 1 file global, 2 file section
  std::vector<std::string> known_elsewhere_;
};

}  // namespace sdistill::cli
