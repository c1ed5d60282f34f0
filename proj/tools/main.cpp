#include <iostream>

#include "coexist/cli.hpp"

int main(int argc, char** argv) { return coexist::cli::run(argc, argv, std::cout, std::cerr); }
