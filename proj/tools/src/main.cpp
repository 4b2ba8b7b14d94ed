#include <iostream>
#include <string>
#include <vector>

#include "rcis/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rcis::cli::run(args, {std::cout, std::cerr, rcis::cli::color_enabled()});
}
