#include "rotstar/cli_io.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return rotstar::run_cli(argc, argv, std::cout, std::cerr);
}
