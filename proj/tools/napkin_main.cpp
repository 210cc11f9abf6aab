#include "napkin/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return napkin::run_cli(argc, argv, std::cout, std::cerr); }
