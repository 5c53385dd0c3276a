#include "evoes_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return evoes::cli::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
