#pragma once

#include <functional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace sdistill::cli {

struct Command {
  CommandSpec spec;
  std::string description;
  std::function<void(const RunConfig&)> run;
};

const std::vector<Command>& commands();
std::vector<CommandSpec> command_specs();
std::string version_text();

}  // namespace sdistill::cli
