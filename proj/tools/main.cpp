#include <iostream>

#include "lsan/commands.hpp"

int main(int argc, char** argv) { return lsan::run_cli(argc, argv, std::cout, std::cerr); }
