#include <iostream>

#include "fmcw/cli.hpp"

int main(int argc, char** argv) { return fmcw::cli_main(argc, argv, std::cout, std::cerr); }
