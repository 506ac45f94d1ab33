#include <iostream>

#include "arealepi/cli.hpp"

int main(int argc, char** argv) { return arealepi::run_cli(argc, argv, std::cout, std::cerr); }
