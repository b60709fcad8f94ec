#include "greenmap/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return greenmap::run_cli(argc, argv, std::cout, std::cerr);
}
