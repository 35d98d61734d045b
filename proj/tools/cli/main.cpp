#include <iostream>

#include "viewcal_cli/cli.hpp"

int main(int argc, char** argv) {
  return viewcal::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
