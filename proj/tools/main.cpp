#include <iostream>

#include "carousel/cli.hpp"

int main(int argc, char** argv) { return carousel::run_cli(argc, argv, std::cout, std::cerr); }
