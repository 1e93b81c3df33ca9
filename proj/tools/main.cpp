#include <iostream>

#include "specsel/cli.hpp"

int main(int argc, char** argv) { return specsel::run_cli(argc, argv, std::cout, std::cerr); }
