#include "evdvsr/app/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return evdvsr::app::run_cli(argc, argv, std::cout, std::cerr); }
