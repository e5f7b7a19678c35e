#include <iostream>
#include <string>
#include <vector>

#include "spd/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spd::cli::dispatch(args, std::cout, std::cerr);
}
