#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("minipath"));
  spdlog::set_pattern("%l: %v");
  std::vector<std::string> args(argv, argv + argc);
  return minipath::cli::run_cli(args, std::cout, std::cerr);
}
