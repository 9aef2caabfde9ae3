#include <iostream>

#include "pdgcli/cli.hpp"

int main(int argc, char** argv) { return pdgcli::run(argc, argv, std::cout, std::cerr); }
