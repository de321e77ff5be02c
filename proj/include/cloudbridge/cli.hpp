#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cloudbridge/config.hpp"

namespace cloudbridge::cli {

// Runs one command line (without the program name) and returns the process
// exit code. Reports go to `out`, diagnostics to `err`.
//
//   login | pull | push <file> | exit | run <file> | serve-mock
//   --config <path>   (default cloudbridge.conf)
//   --format text|json
//   --verbose         wire trace on `err`
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_environment());

// Where login/pull/push/exit keep the live session between invocations.
std::filesystem::path state_file_for(const std::filesystem::path& config_path);

}  // namespace cloudbridge::cli
