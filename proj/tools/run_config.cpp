#include "run_config.hpp"

#include <algorithm>

#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::cli {

std::vector<KeySpec> global_keys() {
  return {{"seed", "1", "global seed; every random stream derives from it"},
          {"jobs", "1", "worker threads (never changes output bytes)"},
          {"vocab", "", "vocabulary file"}};
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return std::string(trim(key));
}

RunConfig::RunConfig(std::string command, const std::vector<CommandSpec>& all) : command_(std::move(command)) {
  bool found = false;
  for (const auto& spec : all) {
    if (spec.name == command_) {
      found = true;
      for (const auto& k : spec.keys) {
        values_[k.name] = k.value;
        priority_[k.name] = 0;
      }
    } else {
      for (const auto& k : spec.keys) known_elsewhere_.push_back(spec.name + "." + k.name);
    }
    known_elsewhere_.push_back(spec.name + ".");
  }
  if (!found) throw UsageError("unknown subcommand '" + command_ + "'");
  for (const auto& k : global_keys()) {
    values_[k.name] = k.value;
    priority_[k.name] = 0;
  }
}

RunConfig::Scope RunConfig::classify(const std::string& key, const std::string& origin) const {
  if (values_.count(key)) return Scope::kMine;
  const std::string suffix = "." + key;
  for (const auto& k : known_elsewhere_) {
    if (k.size() > suffix.size() && k.compare(k.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return Scope::kOther;
    }
  }
  throw UsageError(origin + ": unknown key '" + key + "'");
}

void RunConfig::assign(const std::string& raw_key, const std::string& value, const std::string& origin,
                       bool file) {
  std::string key = normalize_key(raw_key);
  bool section = false;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    const std::string cmd = key.substr(0, dot);
    key = key.substr(dot + 1);
    if (std::find(known_elsewhere_.begin(), known_elsewhere_.end(), cmd + ".") == known_elsewhere_.end() &&
        cmd != command_) {
      throw UsageError(origin + ": unknown subcommand '" + cmd + "'");
    }
    if (cmd != command_) {
      classify(key, origin);
      return;
    }
    section = true;
  }
  if (classify(key, origin) == Scope::kOther) return;
  const int p = file ? (section ? 2 : 1) : 3;
  if (p < priority_[key]) return;
  values_[key] = std::string(trim(value));
  priority_[key] = p;
}

void RunConfig::merge_file_text(const std::string& text, const std::string& origin) {
  const auto lines = split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(i + 1);
    if (eq == std::string_view::npos) throw UsageError(where + ": expected key=value");
    assign(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)), where, true);
  }
}

void RunConfig::set_from_cli(const std::string& key, const std::string& value) {
  assign(key, value, "command line", false);
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + assignment + "'");
  assign(assignment.substr(0, eq), assignment.substr(eq + 1), "--set", false);
}

bool RunConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("undeclared key " + key);
  return it->second;
}

std::string RunConfig::required(const std::string& key) const {
  if (!has(key)) throw UsageError(command_ + ": missing required setting '" + key + "'");
  return str(key);
}

long long RunConfig::integer(const std::string& key) const {
  try {
    return parse_int(required(key));
  } catch (const DataError&) {
    throw UsageError("setting '" + key + "' is not an integer: " + str(key));
  }
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  try {
    return parse_uint(required(key));
  } catch (const DataError&) {
    throw UsageError("setting '" + key + "' is not a non-negative integer: " + str(key));
  }
}

double RunConfig::real(const std::string& key) const {
  try {
    return parse_double(required(key));
  } catch (const DataError&) {
    throw UsageError("setting '" + key + "' is not a number: " + str(key));
  }
}

bool RunConfig::boolean(const std::string& key) const {
  const auto v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v.empty() || v == "false" || v == "0" || v == "no") return false;
  throw UsageError("setting '" + key + "' is not a boolean: " + v);
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& part : split(str(key), ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string RunConfig::echo() const {
  std::string out = "# sdistill " + command_ + "\n";
  for (const auto& [k, v] : values_) {
    if (k == "jobs") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace sdistill::cli
