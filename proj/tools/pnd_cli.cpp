#include <iostream>

#include "pnd/cli.hpp"

int main(int argc, char** argv) { return pnd::run_cli(argc, argv, std::cout, std::cerr); }
