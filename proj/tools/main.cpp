#include <iostream>

#include "bipnet/cli.hpp"

int main(int argc, char** argv) {
  return bipnet::run_cli(argc, argv, std::cout, std::cerr);
}
