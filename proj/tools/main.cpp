#include <iostream>
#include <string>
#include <vector>

#include "specpredict/cli.hpp"

int main(int argc, char** argv) {
  return specpredict::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
