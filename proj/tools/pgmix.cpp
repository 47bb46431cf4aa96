#include <iostream>
#include <string>
#include <vector>

#include "pgmix/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pgmix::cli::run(args, std::cout, std::cerr);
}
