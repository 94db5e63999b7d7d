#include <iostream>

#include "npacert/cli.hpp"

int main(int argc, char** argv) {
  return npacert::cli::run(argc, argv, std::cout, std::cerr);
}
