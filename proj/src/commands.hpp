#pragma once

#include "config.hpp"

#include <string>
#include <vector>

namespace ccepc {

struct Artifact {
  std::string name;
  std::string data;
};

struct CommandResult {
  Json document;     // the command's JSON result
  std::string text;  // human-readable rendering
  std::vector<Artifact> artifacts;
  std::string output_dir;
};

// Resolves the config for `command`: parse, apply overrides, validate.
RunConfig resolve(const std::string& command, const Json& config, const Json& overrides);

// Runs estimate, pipeline, simulate, numfac or cd. Does not touch the file
// system apart from reading the input CSV.
CommandResult run_command(const std::string& command, const Json& config, const Json& overrides);

// Creates `directory` and writes every artifact into it.
void write_artifacts(const CommandResult& result, const std::string& directory);

// The input panel after transforms and balancing, or the simulated panel.
Panel prepare_panel(const RunConfig& config);

}  // namespace ccepc
