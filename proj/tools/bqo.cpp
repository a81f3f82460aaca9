#include <iostream>

#include "bqo/cli.hpp"

int main(int argc, char** argv) {
  return bqo::run_cli(argc, argv, std::cout, std::cerr);
}
