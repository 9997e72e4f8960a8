#include <iostream>
#include <string>
#include <vector>

#include "lbcf/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lbcf::run(args, std::cout, std::cerr);
}
