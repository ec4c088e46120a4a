#include <iostream>
#include <string>
#include <vector>

#include "fcbnn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fcbnn::cli::run(args, std::cout, std::cerr);
}
