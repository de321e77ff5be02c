#include <iostream>

#include "cloudbridge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cloudbridge::cli::cli_main(args, std::cout, std::cerr);
}
