#include <iostream>

#include "mflm/cli.hpp"

int main(int argc, char** argv) { return mflm::run_cli(argc, argv, std::cout, std::cerr); }
