#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char** argv) { return dect::cli::run(argc, argv, std::cout, std::cerr); }
