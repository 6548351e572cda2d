#include <iostream>

#include "hencky/cli.hpp"

int main(int argc, char** argv) { return hencky::run_cli(argc, argv, std::cout, std::cerr); }
