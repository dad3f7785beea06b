#include <iostream>

#include <robggm/cli.hpp>

int main(int argc, char** argv) {
  return robggm::run_cli(argc, argv, std::cout, std::cerr);
}
