#include <iostream>

#include "flexpipe/cli.hpp"

int main(int argc, char** argv) { return flexpipe::cli::run_cli(argc, argv, std::cout, std::cerr); }
