#include <iostream>

#include "wdur/cli.hpp"

int main(int argc, char** argv) { return wdur::run_cli(argc, argv, std::cout, std::cerr); }
