#include <iostream>
#include <string>
#include <vector>

#include "depin/cli.hpp"

int main(int argc, char** argv) {
  return depin::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
