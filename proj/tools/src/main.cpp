#include <iostream>
#include <string>
#include <vector>

#include "destab/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return destab::cli::run_cli(args, std::cout, std::cerr);
}
