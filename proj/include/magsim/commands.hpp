#pragma once

// The experiment subcommands as library calls: one result document, the CSV
// bodies and a one-line summary per run. The CLI adds files and headers.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "magsim/config.hpp"

namespace magsim {

struct CommandOutput {
  std::string summary;
  nlohmann::json result;
  // (file stem, CSV body without the comment header)
  std::vector<std::pair<std::string, std::string>> csv;
};

// anticross, at-scan, chevron, fourier, swap, prepare, wigner, reconstruct.
const std::vector<std::string>& command_names();

// Throws Config for an unknown name.
CommandOutput run_command(const std::string& name, const RunConfig& config);

// Everything in the config that determines the numbers (output location and
// worker count left out).
nlohmann::json config_snapshot(const RunConfig& config);

}  // namespace magsim
