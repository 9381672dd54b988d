#include <iostream>

#include "transfeat/cli.hpp"

int main(int argc, char** argv) { return transfeat::run_cli(argc, argv, std::cout, std::cerr); }
