#include <iostream>

#include "ssn/experiment.hpp"

int main(int argc, char** argv) { return ssn::run_cli(argc, argv, std::cout, std::cerr); }
