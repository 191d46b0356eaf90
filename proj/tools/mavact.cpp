#include <iostream>

#include "mavact/cli.hpp"

int main(int argc, char** argv) { return mavact::cli::run(argc, argv, std::cout, std::cerr); }
