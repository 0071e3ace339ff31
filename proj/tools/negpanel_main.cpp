#include <iostream>
#include <string>
#include <vector>

#include "negpanel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return negpanel::run_cli(args, std::cout, std::cerr);
}
