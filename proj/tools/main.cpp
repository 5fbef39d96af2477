#include <iostream>

#include "pairsafe/cli.hpp"

int main(int argc, char** argv) {
  return pairsafe::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
