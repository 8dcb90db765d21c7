#include <iostream>

#include "qim/cli.hpp"

int main(int argc, char** argv) { return qim::run_cli(argc, argv, std::cout, std::cerr); }
