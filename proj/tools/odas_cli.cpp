#include <iostream>

#include "odas/cli.hpp"

int main(int argc, char** argv) { return odas::cli::run(argc, argv, std::cout, std::cerr); }
