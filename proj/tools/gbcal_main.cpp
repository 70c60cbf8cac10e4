#include <iostream>
#include <string>
#include <vector>

#include "gbcal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gbcal::cli::run(std::move(args), std::cout, std::cerr);
}
