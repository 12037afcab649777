#include <iostream>

#include "physmass/cli.hpp"

int main(int argc, char** argv) { return physmass::run_cli(argc, argv, std::cout, std::cerr); }
