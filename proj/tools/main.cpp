#include <iostream>

#include "streamcqr/cli_io.hpp"

int main(int argc, char** argv) { return streamcqr::run_cli(argc, argv, std::cout, std::cerr); }
