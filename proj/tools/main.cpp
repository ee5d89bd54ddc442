#include <iostream>

#include "occreid/cli.hpp"

int main(int argc, char** argv) { return occreid::run_cli(argc, argv, std::cout, std::cerr); }
