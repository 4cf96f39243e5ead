#include <iostream>

#include "polyalpha/experiments.hpp"

int main(int argc, char** argv) { return polyalpha::cli_dispatch(argc, argv, std::cout, std::cerr); }
