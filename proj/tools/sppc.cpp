#include <iostream>

#include "sppc/cli/commands.hpp"

int main(int argc, char** argv) { return sppc::cli::run_cli(argc, argv, std::cout, std::cerr); }
