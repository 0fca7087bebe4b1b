#include <iostream>

#include "semgraph/cli.hpp"

int main(int argc, char** argv) { return semgraph::run_cli(argc, argv, std::cout, std::cerr); }
