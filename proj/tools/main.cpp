#include <iostream>

#include "sgnlab/cli.hpp"

int main(int argc, char** argv) { return sgnlab::run_cli(argc, argv, std::cout, std::cerr); }
