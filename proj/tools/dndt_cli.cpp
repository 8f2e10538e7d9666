#include <iostream>

#include "dndt/app.hpp"

int main(int argc, char** argv) { return dndt::run_cli(argc, argv, std::cout, std::cerr); }
