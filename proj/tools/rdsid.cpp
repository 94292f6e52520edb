#include <iostream>
#include <string>
#include <vector>

#include "rdsid/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return rdsid::cli_main(args, std::cout, std::cerr);
}
