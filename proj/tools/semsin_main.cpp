#include <iostream>

#include "semsin/cli.hpp"

int main(int argc, char** argv) { return semsin::cli::run(argc, argv, std::cout, std::cerr); }
