#include <iostream>

#include "nvsim/cli.hpp"

int main(int argc, char** argv) { return nvsim::run(argc, argv, std::cout, std::cerr); }
