#include "malflows/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return malflows::run_cli(argc, argv, std::cout, std::cerr); }
