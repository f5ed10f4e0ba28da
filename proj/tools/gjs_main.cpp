#include <iostream>
#include <string>
#include <vector>

#include "gjs/cli_commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gjs::run_cli(args, std::cout, std::cerr);
}
