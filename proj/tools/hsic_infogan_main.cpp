#include <iostream>
#include <string>
#include <vector>

#include "hsic_infogan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hsic_infogan::cli::run(args, std::cout, std::cerr);
}
