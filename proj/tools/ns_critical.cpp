#include <iostream>

#include "nscrit/cli.hpp"

int main(int argc, char** argv) { return nscrit::run_cli(argc, argv, std::cout, std::cerr); }
