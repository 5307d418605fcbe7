#include "surb/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return surb::cli::main(argc, argv, std::cout, std::cerr); }
