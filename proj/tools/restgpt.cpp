#include <iostream>

#include "restgpt/cli.hpp"

int main(int argc, char** argv) { return restgpt::run_cli(argc, argv, std::cout, std::cerr); }
