#pragma once

#include <string>
#include <vector>

#include "app/run_config.hpp"
#include "error.hpp"

namespace adaptlm::app {

inline constexpr const char* kToolName = "adaptlm";
const char* tool_version();

const std::vector<std::string>& command_names();

// Exit status of a batch run.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitDiverged = 3 };
int exit_code_for(ErrorKind kind);

// Runs one command; every output lands in config "out_dir" together with
// run.json and config.txt. Returns kExitDiverged when outputs were written but
// an adaptation run lost finite weights; other failures throw Error.
int run_command(const std::string& command, const RunConfig& config);

// One line per accepted key, for --help.
std::string command_help(const std::string& command);

}  // namespace adaptlm::app
