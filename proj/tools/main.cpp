// sdistill: command-line driver for the distillation pipeline.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sdistill/corpus/tree.hpp"
#include "sdistill/transitions/state.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/text.hpp"

using namespace sdistill;

namespace {

struct Bound {
  std::map<std::string, std::vector<std::string>> values;
  std::map<std::string, bool> flags;
  std::string config;
  std::vector<std::string> sets;
};

int fail(int code, const std::string& kind, const std::string& what) {
  std::fprintf(stderr, "sdistill: %s: %s\n", kind.c_str(), what.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-aware distillation pipeline"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "print file format versions");

  const auto& cmds = cli::commands();
  const auto specs = cli::command_specs();
  std::map<std::string, Bound> bound;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.spec.name, c.description);
    auto& b = bound[c.spec.name];
    sub->add_option("--config", b.config, "key=value config file");
    sub->add_option("--set", b.sets, "override, key=value or command.key=value (repeatable)");
    auto keys = cli::global_keys();
    keys.insert(keys.end(), c.spec.keys.begin(), c.spec.keys.end());
    for (const auto& k : keys) {
      const std::string help = k.help + (k.value.empty() ? "" : " [" + k.value + "]");
      if (k.flag) {
        sub->add_flag("--" + k.name, b.flags[k.name], help);
      } else {
        sub->add_option("--" + k.name, b.values[k.name], help)->allow_extra_args(false);
      }
    }
    subs[c.spec.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (version) {
    std::fputs(cli::version_text().c_str(), stdout);
    return 0;
  }
  const cli::Command* chosen = nullptr;
  for (const auto& c : cmds) {
    if (subs[c.spec.name]->parsed()) chosen = &c;
  }
  if (!chosen) {
    std::fputs(app.help().c_str(), stderr);
    return 1;
  }

  try {
    auto& b = bound[chosen->spec.name];
    cli::RunConfig cfg(chosen->spec.name, specs);
    if (!b.config.empty()) cfg.merge_file_text(read_file(b.config), b.config);
    for (const auto& [key, vals] : b.values) {
      if (!vals.empty()) cfg.set_from_cli(key, join(vals, ","));
    }
    for (const auto& [key, on] : b.flags) {
      if (on) cfg.set_from_cli(key, "true");
    }
    for (const auto& s : b.sets) cfg.apply_override(s);
    chosen->run(cfg);
  } catch (const UsageError& e) {
    return fail(1, "usage error", e.what());
  } catch (const corpus::TreeParseError& e) {
    return fail(2, "data error", e.what());
  } catch (const transitions::TransitionError& e) {
    return fail(2, "data error", e.what());
  } catch (const DataError& e) {
    return fail(2, "data error", e.what());
  } catch (const NumericalError& e) {
    return fail(3, "numerical error", e.what());
  } catch (const std::exception& e) {
    return fail(2, "error", e.what());
  }
  return 0;
}
