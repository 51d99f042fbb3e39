#include <iostream>

#include "irm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return irm::cli::run(args, std::cout, std::cerr);
}
