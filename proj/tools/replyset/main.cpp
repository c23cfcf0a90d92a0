#include <iostream>

#include "replyset/commands.hpp"

int main(int argc, char** argv) { return replyset::cli::run(argc, argv, std::cout, std::cerr); }
