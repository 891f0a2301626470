#include <iostream>

#include "lenet/cli.hpp"

int main(int argc, char** argv)
{
    return lenet::cli::run(argc, argv, std::cout, std::cerr);
}
