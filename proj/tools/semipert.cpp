#include <iostream>

#include "semipert/cli.hpp"

int main(int argc, char** argv) { return semipert::cli::main_entry(argc, argv, std::cerr); }
