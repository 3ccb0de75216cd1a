#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cli/run_config.hpp"

namespace minipath::cli {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

void cmd_sample_paths(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_expand(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log);
void cmd_eval(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log);

// Parses argv (argv[0] is the program name), runs the subcommand and maps
// exceptions to exit codes. Diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace minipath::cli
