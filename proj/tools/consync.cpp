#include <iostream>

#include "consync/cli.hpp"

int main(int argc, char** argv) { return consync::main_entry(argc, argv, std::cout, std::cerr); }
