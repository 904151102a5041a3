#include <iostream>

#include "iaes/cli.hpp"

int main(int argc, char** argv) { return iaes::cli_main(argc, argv, std::cout, std::cerr); }
